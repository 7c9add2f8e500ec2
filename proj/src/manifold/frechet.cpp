#include "mgcn/frechet.hpp"

#include <cmath>
#include <sstream>

#include "mgcn/errors.hpp"

namespace mgcn {

namespace {

Vec weighted_log_sum(const Manifold& m, const Vec& p, const Mat& points, const Vec& weights) {
  Vec v = Vec::Zero(p.size());
  Vec q(p.size());
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    if (weights(i) == 0.0) continue;
    q = points.col(i);
    m.add_log(p, q, weights(i), v);
  }
  return v;
}

}  // namespace

double frechet_residual(const Manifold& m, const Vec& p, const Mat& points, const Vec& weights) {
  return m.norm(p, weighted_log_sum(m, p, points, weights));
}

FrechetResult frechet_mean(const Manifold& m, const Mat& points, const Vec& weights,
                           const FrechetOptions& options) {
  if (points.cols() == 0) throw ContractViolation("Frechet mean of an empty set");
  if (weights.size() != points.cols()) {
    throw ContractViolation("Frechet mean: weight count does not match point count");
  }
  if (points.rows() != m.kind().ambient_dim()) {
    throw ContractViolation("Frechet mean: points have the wrong ambient dimension");
  }

  FrechetResult out;
  Eigen::Index start = 0;
  weights.maxCoeff(&start);  // first maximal index
  out.start_index = static_cast<int>(start);
  out.mean = points.col(start);

  if (points.cols() == 1) return out;

  Vec v = weighted_log_sum(m, out.mean, points, weights);
  out.residual = m.norm(out.mean, v);
  double tau = 1.0;
  while (out.residual > options.tolerance && out.iterations < options.max_iterations) {
    ++out.iterations;
    const Vec candidate = m.exp(out.mean, tau * v);
    const Vec cv = weighted_log_sum(m, candidate, points, weights);
    const double cr = m.norm(candidate, cv);
    if (cr < out.residual) {
      out.steps.push_back(tau);
      if (options.record_path) {
        out.path.push_back(out.mean);
        out.directions.push_back(v);
      }
      out.mean = candidate;
      v = cv;
      out.residual = cr;
    } else {
      tau *= 0.5;
      if (tau < 1e-6) break;  // stalled at round-off level
    }
  }

  if (!(out.residual <= options.acceptance)) {
    std::ostringstream msg;
    msg << "Frechet mean on " << m.kind().name() << " did not converge: residual " << out.residual
        << " after " << out.iterations << " iterations";
    throw NonConvergence(msg.str());
  }
  return out;
}

ManifoldPoint frechet_mean(std::span<const ManifoldPoint> points, std::span<const double> weights,
                           const FrechetOptions& options) {
  if (points.empty()) throw ContractViolation("Frechet mean of an empty set");
  if (points.size() != weights.size()) {
    throw ContractViolation("Frechet mean: weight count does not match point count");
  }
  const ManifoldKind kind = points.front().kind;
  Mat pts(kind.ambient_dim(), static_cast<Eigen::Index>(points.size()));
  Vec w(static_cast<Eigen::Index>(weights.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].kind == kind)) throw ContractViolation("Frechet mean: mixed manifolds");
    check_point(points[i]);
    if (!(weights[i] > 0.0)) throw ContractViolation("Frechet mean: weights must be positive");
    pts.col(static_cast<Eigen::Index>(i)) = points[i].coords;
    w(static_cast<Eigen::Index>(i)) = weights[i];
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractViolation("Frechet mean: weights must sum to 1");

  if (kind.tag == ManifoldTag::Sphere) {
    // Sufficient test for an open hemisphere: every point is strictly on the
    // positive side of the normalized chordal mean.
    Vec c = pts.rowwise().sum();
    bool ok = c.norm() > 1e-12;
    if (ok) {
      c.normalize();
      ok = ((c.transpose() * pts).array() > 1e-12).all();
    }
    if (!ok) throw ContractViolation("Frechet mean: sphere points are not in an open hemisphere");
  }

  const auto m = make_manifold(kind);
  return {kind, frechet_mean(*m, pts, w, options).mean};
}

}  // namespace mgcn
