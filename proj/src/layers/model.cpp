#include <cmath>
#include <sstream>

#include "mgcn/errors.hpp"
#include "mgcn/frechet.hpp"
#include "mgcn/model.hpp"
#include "tape.hpp"

namespace mgcn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int ModelDescriptor::pooled_width() const {
  const int c = widths.empty() ? 0 : widths.back();
  return 2 * (invariant_mode == InvariantMode::Pair ? 2 * c : c);
}

void ModelDescriptor::validate() const {
  kind.validate();
  if (widths.size() < 2) throw ContractViolation("model: need at least one diffusion/tMLP block");
  for (int w : widths) {
    if (w < 1) throw ContractViolation("model: channel widths must be positive");
  }
  if (steps < 1) throw ContractViolation("model: step count must be at least 1");
  if (hidden < 1) throw ContractViolation("model: hidden width must be positive");
  if (classes < 2) throw ContractViolation("model: at least two classes required");
  if (covariates < 0) throw ContractViolation("model: negative covariate count");
  if (reference_channel < 0) throw ContractViolation("model: negative reference channel");
  for (int k = 0; k < blocks(); ++k) {
    if (reference_channel >= widths[k]) {
      throw ContractViolation("model: reference channel exceeds a tMLP input width");
    }
  }
  if (degree_inputs < 0) throw ContractViolation("model: negative degree embedding size");
  if (degree_inputs > 0 && kind.tag != ManifoldTag::Lorentz) {
    throw ContractViolation("model: the degree embedding requires a Lorentz feature space");
  }
}

std::vector<ParamSlice> param_layout(const ModelDescriptor& d) {
  d.validate();
  std::vector<ParamSlice> out;
  Eigen::Index off = 0;
  auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols) {
    out.push_back({std::move(name), off, rows, cols});
    off += rows * cols;
  };
  if (d.degree_inputs > 0) add("embed.A", d.kind.dim, d.degree_inputs);
  for (int k = 0; k < d.blocks(); ++k) {
    const std::string b = std::to_string(k);
    add("diffusion" + b + ".t", d.widths[k], 1);
    add("diffusion" + b + ".alpha", d.widths[k], 1);
    add("tmlp" + b + ".omega", d.widths[k + 1], d.widths[k]);
    add("tmlp" + b + ".xi", d.widths[k + 1], d.widths[k]);
  }
  const int c = d.widths.back();
  add("invariant.logits1", c, c);
  add("invariant.logits2", c, c);
  add("head.w1", d.hidden, d.pooled_width() + d.covariates);
  add("head.b1", d.hidden, 1);
  add("head.w2", d.classes, d.hidden);
  add("head.b2", d.classes, 1);
  return out;
}

ParamCount count_params(const ModelDescriptor& d) {
  ParamCount pc;
  for (const ParamSlice& s : param_layout(d)) {
    pc.total += s.size();
    const std::string component = s.name.substr(0, s.name.find('.'));
    if (!pc.breakdown.empty() && pc.breakdown.back().first == component) {
      pc.breakdown.back().second += s.size();
    } else {
      pc.breakdown.emplace_back(component, s.size());
    }
  }
  return pc;
}

// ---------------------------------------------------------------------------

ModelParams::ModelParams(ModelDescriptor d) : desc_(std::move(d)), layout_(param_layout(desc_)) {
  Eigen::Index total = 0;
  for (const auto& s : layout_) total += s.size();
  flat_ = Vec::Zero(total);
}

ModelParams::ModelParams(ModelDescriptor d, Vec flat) : ModelParams(std::move(d)) {
  if (flat.size() != flat_.size()) {
    std::ostringstream msg;
    msg << "parameter vector has length " << flat.size() << ", descriptor needs " << flat_.size();
    throw ContractViolation(msg.str());
  }
  flat_ = std::move(flat);
}

ModelParams ModelParams::init(const ModelDescriptor& d, Rng& rng) {
  ModelParams p(d);
  std::uniform_real_distribution<double> time(0.5, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const ParamSlice& s : p.layout_) {
    auto seg = p.flat_.segment(s.offset, s.size());
    const std::string field = s.name.substr(s.name.find('.') + 1);
    if (field == "t") {
      for (Eigen::Index i = 0; i < seg.size(); ++i) seg(i) = time(rng);
    } else if (field == "omega" || field == "xi" || field == "w1" || field == "w2" || field == "A") {
      // variance 1 / fan_in
      const double sd = 1.0 / std::sqrt(static_cast<double>(s.cols));
      for (Eigen::Index i = 0; i < seg.size(); ++i) seg(i) = sd * normal(rng);
    } else if (field == "logits2" && d.invariant_mode == InvariantMode::Difference) {
      // equal weight sets would make every difference feature vanish
      for (Eigen::Index i = 0; i < seg.size(); ++i) seg(i) = normal(rng);
    }
    // remaining parameters start at zero
  }
  return p;
}

const ParamSlice& ModelParams::slice(const std::string& name) const {
  for (const auto& s : layout_) {
    if (s.name == name) return s;
  }
  throw ContractViolation("no parameter named " + name);
}

Mat ModelParams::matrix(const std::string& name) const {
  const ParamSlice& s = slice(name);
  return Eigen::Map<const RowMat>(flat_.data() + s.offset, s.rows, s.cols);
}

DiffusionParams ModelParams::diffusion(int block) const {
  const std::string b = std::to_string(block);
  // a negative threshold acts like 0: every norm passes
  return {matrix("diffusion" + b + ".t").col(0),
          matrix("diffusion" + b + ".alpha").col(0).cwiseMax(0.0), desc_.steps};
}

TmlpLayerParams ModelParams::tmlp(int block) const {
  const std::string b = std::to_string(block);
  return {matrix("tmlp" + b + ".omega"), matrix("tmlp" + b + ".xi")};
}

InvariantParams ModelParams::invariant() const {
  return {matrix("invariant.logits1"), matrix("invariant.logits2")};
}

HeadParams ModelParams::head() const {
  return {matrix("head.w1"), matrix("head.b1").col(0), matrix("head.w2"),
          matrix("head.b2").col(0), desc_.slope};
}

Mat ModelParams::embedding() const { return matrix("embed.A"); }

void ModelParams::project() {
  for (const auto& s : layout_) {
    const std::string field = s.name.substr(s.name.find('.') + 1);
    if (field == "t" || field == "alpha") {
      auto seg = flat_.segment(s.offset, s.size());
      seg = seg.cwiseMax(0.0);
    }
  }
}

Vec flatten(const ModelParams& p) { return p.flat(); }

ModelParams unflatten(const Vec& flat, const ModelDescriptor& d) { return ModelParams(d, flat); }

// ---------------------------------------------------------------------------

namespace {

void check_input(const ModelDescriptor& d, const FeatureGraph& g) {
  if (!(g.kind() == d.kind)) {
    throw ContractViolation("model expects " + d.kind.name() + " features, graph has " +
                            g.kind().name());
  }
  if (g.node_count() < 1) throw ContractViolation("model input graph has no nodes");
  if (g.covariates().size() != d.covariates) {
    std::ostringstream msg;
    msg << "model expects " << d.covariates << " covariates, graph has " << g.covariates().size();
    throw ContractViolation(msg.str());
  }
  if (d.degree_inputs == 0 && g.channel_count() != 1 && g.channel_count() != d.widths.front()) {
    throw ContractViolation("model input must have one channel or as many as the first layer");
  }
}

int degree_index(const ModelDescriptor& d, const Graph& g, int v) {
  const int deg = g.out_degree(v);
  if (deg >= d.degree_inputs) {
    std::ostringstream msg;
    msg << "node " << v << " has degree " << deg << ", embedding supports at most "
        << d.degree_inputs - 1;
    throw ContractViolation(msg.str());
  }
  return deg;
}

}  // namespace

Channels model_inputs(const ModelParams& params, const FeatureGraph& g) {
  const ModelDescriptor& d = params.descriptor();
  check_input(d, g);
  const int c0 = d.widths.front();
  if (d.degree_inputs > 0) {
    const auto m = make_manifold(d.kind);
    const Mat a = params.embedding();
    Mat f(d.kind.ambient_dim(), g.node_count());
    for (int v = 0; v < g.node_count(); ++v) {
      Vec x = Vec::Zero(d.kind.ambient_dim());
      x.head(d.kind.dim) = a.col(degree_index(d, g.graph(), v));
      f.col(v) = m->exp(m->origin(), x);
    }
    return Channels(c0, f);
  }
  if (g.channel_count() == 1) return Channels(c0, g.channel(0));
  return g.channels();
}

ForwardTrace forward_trace(const ModelParams& params, const FeatureGraph& g) {
  const ModelDescriptor& d = params.descriptor();
  const auto m = make_manifold(d.kind);
  const TmlpOptions opts{d.tmlp_mode, d.slope};
  ForwardTrace tr;
  Channels cur = model_inputs(params, g);
  for (int k = 0; k < d.blocks(); ++k) {
    cur = diffusion_layer(*m, g.graph(), cur, params.diffusion(k));
    cur = tmlp_layer(*m, cur, params.tmlp(k), d.reference_channel, opts);
  }
  tr.block_output = cur;
  tr.invariant = invariant_layer(*m, cur, params.invariant(), d.invariant_mode);
  tr.pooled = pool(tr.invariant);
  tr.log_probs = head(tr.pooled, g.covariates(), params.head());
  return tr;
}

Vec forward(const ModelParams& params, const FeatureGraph& g) {
  return forward_trace(params, g).log_probs;
}

double sample_loss(const ModelParams& params, const FeatureGraph& g) {
  return cross_entropy(forward(params, g), g.label());
}

// ---------------------------------------------------------------------------
// Taped forward pass. Mirrors forward_trace op for op.

namespace {

using detail::Tape;
using Id = Tape::Id;
using Term = Tape::Term;

struct TapedModel {
  Tape tape;
  const ModelParams& params;
  const ModelDescriptor& d;
  const Manifold& m;
  Id theta;

  TapedModel(const ModelParams& p, const Manifold& man)
      : params(p), d(p.descriptor()), m(man), theta(tape.leaf(p.flat())) {}

  Id param(const std::string& name) {
    const ParamSlice& s = params.slice(name);
    return tape.slice(theta, s.offset, s.size());
  }

  std::vector<Id> scalars(Id vec) {
    std::vector<Id> out(tape.value(vec).size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = tape.element(vec, static_cast<Eigen::Index>(i));
    return out;
  }

  // channel -> node -> point node
  using Features = std::vector<std::vector<Id>>;

  Features inputs(const FeatureGraph& g) {
    const int c0 = d.widths.front();
    std::vector<Id> base(g.node_count());
    if (d.degree_inputs > 0) {
      const Id a = param("embed.A");
      const Id origin = tape.leaf(m.origin());
      const int dim = d.kind.dim;
      for (int v = 0; v < g.node_count(); ++v) {
        const int col = degree_index(d, g.graph(), v);
        std::vector<Id> comps;
        comps.reserve(dim + 1);
        // row-major A: entry (r, col) sits at r * degree_inputs + col
        for (int r = 0; r < dim; ++r) comps.push_back(tape.element(a, r * d.degree_inputs + col));
        comps.push_back(tape.constant_scalar(0.0));
        base[v] = tape.exp(m, origin, tape.concat(comps));
      }
      return Features(c0, base);
    }
    if (g.channel_count() == 1) {
      for (int v = 0; v < g.node_count(); ++v) base[v] = tape.leaf(g.channel(0).col(v));
      return Features(c0, base);
    }
    Features f(c0, std::vector<Id>(g.node_count()));
    for (int c = 0; c < c0; ++c) {
      for (int v = 0; v < g.node_count(); ++v) f[c][v] = tape.leaf(g.channel(c).col(v));
    }
    return f;
  }

  std::vector<Id> step(const Graph& g, const std::vector<Id>& f, Id t, double alpha) {
    const Eigen::Index dim = m.ambient_dim();
    std::vector<Id> out(f.size());
    for (int v = 0; v < g.node_count(); ++v) {
      std::vector<Term> terms;
      for (int k : g.out_edges(v)) {
        const Edge& e = g.edges()[k];
        terms.push_back({-1, -e.weight, tape.log(m, f[v], f[e.to])});
      }
      const Id lap = tape.lincomb(std::move(terms), dim);
      Id x;
      if (alpha <= 0.0 || m.norm(tape.value(f[v]), tape.value(lap)) >= alpha) {
        x = tape.lincomb({{t, -1.0, lap}}, dim);
      } else {
        x = tape.leaf(Vec::Zero(dim));
      }
      out[v] = tape.exp(m, f[v], x);
    }
    return out;
  }

  Features diffusion(const Graph& g, const Features& in, int block) {
    const std::string b = std::to_string(block);
    const std::vector<Id> t = scalars(param("diffusion" + b + ".t"));
    const Vec alpha = params.diffusion(block).alpha;
    Features out = in;
    for (std::size_t c = 0; c < in.size(); ++c) {
      for (int s = 0; s < d.steps; ++s) out[c] = step(g, out[c], t[c], alpha(static_cast<Eigen::Index>(c)));
    }
    return out;
  }

  Features tmlp(const Features& in, int block) {
    const std::string b = std::to_string(block);
    const int cin = d.widths[block];
    const int cout = d.widths[block + 1];
    const std::vector<Id> omega = scalars(param("tmlp" + b + ".omega"));
    const std::vector<Id> xi = scalars(param("tmlp" + b + ".xi"));
    const Eigen::Index dim = m.ambient_dim();
    const std::size_t n = in.front().size();
    Features out(cout, std::vector<Id>(n));
    for (std::size_t v = 0; v < n; ++v) {
      const Id ref = in[d.reference_channel][v];
      std::vector<Id> logs(cin);
      for (int i = 0; i < cin; ++i) logs[i] = tape.log(m, ref, in[i][v]);
      for (int j = 0; j < cout; ++j) {
        std::vector<Term> tx, ty;
        for (int i = 0; i < cin; ++i) {
          tx.push_back({omega[j * cin + i], 1.0, logs[i]});
          ty.push_back({xi[j * cin + i], 1.0, logs[i]});
        }
        const Id x = tape.lincomb(std::move(tx), dim);
        const Id ytilde = tape.lincomb(std::move(ty), dim);
        const Id ny = tape.norm(m, ref, ytilde);
        Id z = x;
        if (tape.scalar(ny) >= kDegenerateDirection) {
          const Id y = tape.divide(ytilde, ny);
          const Id s = tape.inner(m, ref, x, y);
          // sign(s) * leaky(|s|) == s, so the norm reading leaves s unchanged
          const Id sig = d.tmlp_mode == TmlpMode::Signed ? tape.leaky_relu(s, d.slope) : s;
          z = tape.lincomb({{sig, 1.0, y}, {-1, 1.0, x}, {s, -1.0, y}}, dim);
        }
        out[j][v] = tape.exp(m, ref, z);
      }
    }
    return out;
  }

  // Replays the accepted steps of the plain Frechet iteration.
  Id frechet(const std::vector<Id>& pts, const std::vector<Id>& w) { return tape.frechet(m, pts, w); }

  Id invariant_and_pool(const Features& in) {
    const int c = d.widths.back();
    const Id l1 = param("invariant.logits1");
    const Id l2 = param("invariant.logits2");
    std::vector<std::vector<Id>> w1(c), w2(c);
    for (int j = 0; j < c; ++j) {
      w1[j] = scalars(tape.softmax(tape.slice(l1, j * c, c)));
      w2[j] = scalars(tape.softmax(tape.slice(l2, j * c, c)));
    }
    const std::size_t n = in.front().size();
    const int rows = d.invariant_mode == InvariantMode::Pair ? 2 * c : c;
    std::vector<std::vector<Id>> scal(rows, std::vector<Id>(n));
    const Id one = tape.constant_scalar(1.0);
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<Id> pts(c);
      for (int i = 0; i < c; ++i) pts[i] = in[i][v];
      for (int j = 0; j < c; ++j) {
        const Id d1 = tape.dist(m, pts[j], frechet(pts, w1[j]));
        const Id d2 = tape.dist(m, pts[j], frechet(pts, w2[j]));
        if (d.invariant_mode == InvariantMode::Pair) {
          scal[2 * j][v] = d1;
          scal[2 * j + 1][v] = d2;
        } else {
          scal[j][v] = tape.lincomb({{d1, 1.0, one}, {d2, -1.0, one}}, 1);
        }
      }
    }
    std::vector<Id> maxes(rows), means(rows);
    for (int r = 0; r < rows; ++r) {
      maxes[r] = tape.max(scal[r]);
      std::vector<Term> terms;
      for (std::size_t v = 0; v < n; ++v) terms.push_back({scal[r][v], 1.0 / static_cast<double>(n), one});
      means[r] = tape.lincomb(std::move(terms), 1);
    }
    std::vector<Id> parts = maxes;
    parts.insert(parts.end(), means.begin(), means.end());
    return tape.concat(parts);
  }

  Id head(Id pooled, const Vec& covariates) {
    const Id in = covariates.size() > 0 ? tape.concat({pooled, tape.leaf(covariates)}) : pooled;
    const Id h = tape.leaky_relu(tape.affine(param("head.w1"), param("head.b1"), in, d.hidden), d.slope);
    return tape.log_softmax(tape.affine(param("head.w2"), param("head.b2"), h, d.classes));
  }
};

}  // namespace

LossGradient loss_gradient(const ModelParams& params, const FeatureGraph& g) {
  const ModelDescriptor& d = params.descriptor();
  check_input(d, g);
  const auto m = make_manifold(d.kind);
  TapedModel tm(params, *m);
  TapedModel::Features cur = tm.inputs(g);
  for (int k = 0; k < d.blocks(); ++k) {
    cur = tm.diffusion(g.graph(), cur, k);
    cur = tm.tmlp(cur, k);
  }
  const Id logp = tm.head(tm.invariant_and_pool(cur), g.covariates());
  if (g.label() < 0 || g.label() >= d.classes) throw ContractViolation("label out of range");
  const Id loss = tm.tape.lincomb({{tm.tape.element(logp, g.label()), -1.0, tm.tape.constant_scalar(1.0)}}, 1);
  tm.tape.backward(loss);
  return {tm.tape.scalar(loss), tm.tape.grad(tm.theta), tm.tape.value(logp)};
}

}  // namespace mgcn
