#include <algorithm>
#include <cmath>
#include <sstream>

#include "mgcn/errors.hpp"
#include "mgcn/frechet.hpp"
#include "mgcn/layers.hpp"

namespace mgcn {

Vec activate(const Manifold& m, const Vec& p, const Vec& x, double alpha) {
  if (alpha <= 0.0) return x;
  return m.norm(p, x) >= alpha ? x : Vec::Zero(x.size());
}

Mat step_map(const Manifold& m, const Graph& g, const Mat& f, double t, double alpha, int channel) {
  const TangentField lap = laplacian(m, g, f, channel);
  Mat out(f.rows(), f.cols());
  for (Eigen::Index v = 0; v < f.cols(); ++v) {
    const Vec p = f.col(v);
    out.col(v) = m.exp(p, -t * activate(m, p, lap.col(v), alpha));
  }
  return out;
}

Mat l_step_map(const Manifold& m, const Graph& g, const Mat& f, double t, double alpha, int steps,
               int channel) {
  if (steps < 1) throw ContractViolation("l_step_map: step count must be at least 1");
  Mat cur = f;
  for (int s = 0; s < steps; ++s) {
    try {
      cur = step_map(m, g, cur, t, alpha, channel);
    } catch (const CutLocusError& err) {
      std::ostringstream msg;
      msg << "step " << s + 1 << " of " << steps << ": " << err.what();
      throw CutLocusError(msg.str(), err.from(), err.to(), err.channel());
    }
  }
  return cur;
}

void DiffusionParams::validate() const {
  if (t.size() != alpha.size()) throw ContractViolation("diffusion: t and alpha differ in length");
  if (t.size() < 1) throw ContractViolation("diffusion: at least one channel required");
  if (steps < 1) throw ContractViolation("diffusion: step count must be at least 1");
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (!(t(i) >= 0.0) || !(alpha(i) >= 0.0)) {
      throw ContractViolation("diffusion: t and alpha must be non-negative");
    }
  }
}

Channels diffusion_layer(const Manifold& m, const Graph& g, const Channels& in,
                         const DiffusionParams& params) {
  params.validate();
  if (static_cast<int>(in.size()) != params.channels()) {
    throw ContractViolation("diffusion: channel count does not match parameters");
  }
  Channels out;
  out.reserve(in.size());
  for (int c = 0; c < params.channels(); ++c) {
    out.push_back(l_step_map(m, g, in[c], params.t(c), params.alpha(c), params.steps, c));
  }
  return out;
}

// ---------------------------------------------------------------------------

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

std::vector<Mat> tmlp_tangent_layer(const Manifold& m, const Mat& ref, const std::vector<Mat>& logs,
                                    const TmlpLayerParams& params, const TmlpOptions& options) {
  const int cin = params.in_channels();
  const int cout = params.out_channels();
  if (params.xi.rows() != cout || params.xi.cols() != cin) {
    throw ContractViolation("tMLP: omega and xi differ in shape");
  }
  if (static_cast<int>(logs.size()) != cin) {
    throw ContractViolation("tMLP: input channel count does not match weights");
  }
  const Eigen::Index n = ref.cols();
  std::vector<Mat> z(cout, Mat(ref.rows(), n));
  for (Eigen::Index v = 0; v < n; ++v) {
    const Vec p = ref.col(v);
    for (int j = 0; j < cout; ++j) {
      Vec x = Vec::Zero(ref.rows());
      Vec y = Vec::Zero(ref.rows());
      for (int i = 0; i < cin; ++i) {
        x += params.omega(j, i) * logs[i].col(v);
        y += params.xi(j, i) * logs[i].col(v);
      }
      const double ny = m.norm(p, y);
      if (ny < kDegenerateDirection) {
        z[j].col(v) = x;
        continue;
      }
      y /= ny;
      const double s = m.inner(p, x, y);
      double scaled = 0.0;
      if (options.mode == TmlpMode::Signed) {
        scaled = leaky_relu(s, options.slope);
      } else {
        scaled = (s >= 0.0 ? 1.0 : -1.0) * leaky_relu(std::abs(s), options.slope);
      }
      z[j].col(v) = scaled * y + (x - s * y);
    }
  }
  return z;
}

namespace {

std::vector<Mat> logs_at(const Manifold& m, const Mat& ref, const Channels& in) {
  std::vector<Mat> logs;
  logs.reserve(in.size());
  for (const Mat& f : in) {
    if (f.rows() != ref.rows() || f.cols() != ref.cols()) {
      throw ContractViolation("tMLP: channel shapes differ");
    }
    Mat l(f.rows(), f.cols());
    for (Eigen::Index v = 0; v < f.cols(); ++v) l.col(v) = m.log(ref.col(v), f.col(v));
    logs.push_back(std::move(l));
  }
  return logs;
}

Channels exps_at(const Manifold& m, const Mat& ref, const std::vector<Mat>& z) {
  Channels out;
  out.reserve(z.size());
  for (const Mat& zj : z) {
    Mat g(zj.rows(), zj.cols());
    for (Eigen::Index v = 0; v < zj.cols(); ++v) g.col(v) = m.exp(ref.col(v), zj.col(v));
    out.push_back(std::move(g));
  }
  return out;
}

const Mat& reference(const Channels& in, int reference_channel) {
  if (reference_channel < 0 || reference_channel >= static_cast<int>(in.size())) {
    throw ContractViolation("tMLP: reference channel out of range");
  }
  return in[reference_channel];
}

}  // namespace

Channels tmlp_layer(const Manifold& m, const Channels& in, const Mat& ref,
                    const TmlpLayerParams& params, const TmlpOptions& options) {
  return exps_at(m, ref, tmlp_tangent_layer(m, ref, logs_at(m, ref, in), params, options));
}

Channels tmlp_layer(const Manifold& m, const Channels& in, const TmlpLayerParams& params,
                    int reference_channel, const TmlpOptions& options) {
  const Mat ref = reference(in, reference_channel);
  return tmlp_layer(m, in, ref, params, options);
}

Channels tmlp(const Manifold& m, const Channels& in, const std::vector<TmlpLayerParams>& layers,
              int reference_channel, const TmlpOptions& options, bool cancel) {
  const Mat ref = reference(in, reference_channel);
  if (layers.empty()) return in;
  if (cancel) {
    std::vector<Mat> z = logs_at(m, ref, in);
    for (const auto& layer : layers) z = tmlp_tangent_layer(m, ref, z, layer, options);
    return exps_at(m, ref, z);
  }
  Channels cur = in;
  for (const auto& layer : layers) cur = tmlp_layer(m, cur, ref, layer, options);
  return cur;
}

// ---------------------------------------------------------------------------

Vec softmax(const Vec& logits) {
  const double mx = logits.maxCoeff();
  Vec e = (logits.array() - mx).exp();
  return e / e.sum();
}

Mat invariant_layer(const Manifold& m, const Channels& in, const InvariantParams& params,
                    InvariantMode mode) {
  const int c = params.channels();
  if (params.logits1.cols() != c || params.logits2.rows() != c || params.logits2.cols() != c) {
    throw ContractViolation("invariant layer: weight logits must be c x c");
  }
  if (static_cast<int>(in.size()) != c) {
    throw ContractViolation("invariant layer: channel count does not match weights");
  }
  const Eigen::Index n = in.front().cols();
  std::vector<Vec> w1(c), w2(c);
  for (int j = 0; j < c; ++j) {
    w1[j] = softmax(params.logits1.row(j).transpose());
    w2[j] = softmax(params.logits2.row(j).transpose());
  }
  Mat out(mode == InvariantMode::Pair ? 2 * c : c, n);
  Mat pts(in.front().rows(), c);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (int i = 0; i < c; ++i) pts.col(i) = in[i].col(v);
    for (int j = 0; j < c; ++j) {
      const Vec mu1 = frechet_mean(m, pts, w1[j]).mean;
      const Vec mu2 = frechet_mean(m, pts, w2[j]).mean;
      const double d1 = m.dist(pts.col(j), mu1);
      const double d2 = m.dist(pts.col(j), mu2);
      if (mode == InvariantMode::Pair) {
        out(2 * j, v) = d1;
        out(2 * j + 1, v) = d2;
      } else {
        out(j, v) = d1 - d2;
      }
    }
  }
  return out;
}

Vec pool(const Mat& scalars) {
  if (scalars.cols() == 0) throw ContractViolation("pool: empty graph");
  const Eigen::Index k = scalars.rows();
  Vec out(2 * k);
  out.head(k) = scalars.rowwise().maxCoeff();
  out.tail(k) = scalars.rowwise().mean();
  return out;
}

Vec log_softmax(const Vec& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return logits.array() - lse;
}

Vec head(const Vec& pooled, const Vec& covariates, const HeadParams& params) {
  Vec in(pooled.size() + covariates.size());
  in << pooled, covariates;
  if (params.w1.cols() != in.size() || params.b1.size() != params.w1.rows() ||
      params.w2.cols() != params.w1.rows() || params.b2.size() != params.w2.rows()) {
    throw ContractViolation("head: parameter shapes do not match the pooled width");
  }
  Vec h = params.w1 * in + params.b1;
  for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = leaky_relu(h(i), params.slope);
  return log_softmax(params.w2 * h + params.b2);
}

double cross_entropy(const Vec& log_probs, int label) {
  if (label < 0 || label >= log_probs.size()) throw ContractViolation("label out of range");
  return -log_probs(label);
}

}  // namespace mgcn
