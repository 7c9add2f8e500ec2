#include "kinds.hpp"

namespace mgcn::detail {

double EuclideanManifold::inner(const Vec&, const Vec& x, const Vec& y) const { return x.dot(y); }

Vec EuclideanManifold::exp(const Vec& p, const Vec& x) const { return p + x; }

Vec EuclideanManifold::log(const Vec& p, const Vec& q) const { return q - p; }

double EuclideanManifold::dist(const Vec& p, const Vec& q) const { return (q - p).norm(); }

Vec EuclideanManifold::origin() const { return Vec::Zero(ambient_dim()); }

double EuclideanManifold::point_residual(const Vec& p) const {
  return p.allFinite() ? 0.0 : std::numeric_limits<double>::infinity();
}

double EuclideanManifold::tangent_residual(const Vec&, const Vec& x) const {
  return x.allFinite() ? 0.0 : std::numeric_limits<double>::infinity();
}

Vec EuclideanManifold::random_point(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec p(ambient_dim());
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = normal(rng);
  return p;
}

Vec EuclideanManifold::random_tangent(const Vec&, double scale, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, scale);
  Vec x(ambient_dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  return x;
}

void EuclideanManifold::exp_vjp(const Vec&, const Vec&, const Vec& g, Vec& gp, Vec& gx) const {
  gp += g;
  gx += g;
}

void EuclideanManifold::log_vjp(const Vec&, const Vec&, const Vec& g, Vec& gp, Vec& gq) const {
  gp -= g;
  gq += g;
}

void EuclideanManifold::dist_vjp(const Vec& p, const Vec& q, double g, Vec& gp, Vec& gq) const {
  const Vec diff = p - q;
  const double d = diff.norm();
  if (d == 0.0) return;  // zero subgradient at the kink
  gp += (g / d) * diff;
  gq -= (g / d) * diff;
}

void EuclideanManifold::inner_vjp(const Vec&, const Vec& x, const Vec& y, double g, Vec&, Vec& gx,
                                  Vec& gy) const {
  gx += g * y;
  gy += g * x;
}

}  // namespace mgcn::detail
