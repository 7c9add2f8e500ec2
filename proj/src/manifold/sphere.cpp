#include <cmath>
#include <numbers>
#include <sstream>

#include "kinds.hpp"
#include "mgcn/errors.hpp"

namespace mgcn::detail {

namespace {

// sin(n)/n
double sinc(double n) { return std::abs(n) < 1e-4 ? 1.0 - n * n / 6.0 : std::sin(n) / n; }

// (d/dn sinc(n)) / n
double sinc_d_over_n(double n) {
  if (std::abs(n) < 1e-3) return -1.0 / 3.0 + n * n / 30.0;
  return (n * std::cos(n) - std::sin(n)) / (n * n * n);
}

struct LogParts {
  double a;  // <p, q>
  Vec u;     // q - a p
  double s;  // |u|
  double theta;
  double k;  // theta / s
};

LogParts log_parts(const Vec& p, const Vec& q) {
  LogParts r;
  r.a = p.dot(q);
  r.u = q - r.a * p;
  r.s = r.u.norm();
  r.theta = std::atan2(r.s, r.a);
  if (r.s < 1e-4 * std::abs(r.a) && r.a > 0) {
    const double x = r.s / r.a;
    r.k = (1.0 - x * x / 3.0 + x * x * x * x / 5.0) / r.a;
  } else {
    r.k = r.theta / r.s;
  }
  return r;
}

}  // namespace

double SphereManifold::inner(const Vec&, const Vec& x, const Vec& y) const { return x.dot(y); }

Vec SphereManifold::exp(const Vec& p, const Vec& x) const {
  const double n = x.norm();
  if (n == 0.0) return p;
  Vec r = std::cos(n) * p + sinc(n) * x;
  return r / r.norm();
}

bool SphereManifold::log_defined(const Vec& p, const Vec& q) const {
  return dist(p, q) <= std::numbers::pi - kCutLocusTolerance;
}

Vec SphereManifold::log(const Vec& p, const Vec& q) const {
  if (p == q) return zero_tangent();
  if (!log_defined(p, q)) {
    std::ostringstream msg;
    msg << "sphere log undefined: points are antipodal (dist " << dist(p, q) << ")";
    throw CutLocusError(msg.str());
  }
  LogParts parts = log_parts(p, q);
  return parts.k * parts.u;
}

double SphereManifold::dist(const Vec& p, const Vec& q) const {
  return 2.0 * std::atan2((p - q).norm(), (p + q).norm());
}

Vec SphereManifold::origin() const {
  Vec o = Vec::Zero(ambient_dim());
  o(ambient_dim() - 1) = 1.0;
  return o;
}

double SphereManifold::point_residual(const Vec& p) const { return std::abs(p.norm() - 1.0); }

double SphereManifold::tangent_residual(const Vec& p, const Vec& x) const {
  return std::abs(p.dot(x));
}

Vec SphereManifold::project_point(const Vec& p) const { return p / p.norm(); }

Vec SphereManifold::project_tangent(const Vec& p, const Vec& v) const { return v - p.dot(v) * p; }

Vec SphereManifold::random_point(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec p(ambient_dim());
  do {
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = normal(rng);
  } while (p.norm() < 1e-8);
  return p / p.norm();
}

Vec SphereManifold::random_tangent(const Vec& p, double scale, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(ambient_dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  return project_tangent(p, v);
}

void SphereManifold::exp_vjp(const Vec& p, const Vec& x, const Vec& g, Vec& gp, Vec& gx) const {
  const double n = x.norm();
  gp += std::cos(n) * g;
  gx += sinc(n) * g + (-sinc(n) * p.dot(g) + sinc_d_over_n(n) * x.dot(g)) * x;
}

void SphereManifold::log_vjp(const Vec& p, const Vec& q, const Vec& g, Vec& gp, Vec& gq) const {
  const LogParts lp = log_parts(p, q);
  const double a = lp.a, s = lp.s;
  const double r2 = s * s + a * a;

  // d k / d s divided by s, and d k / d a.
  double dks_over_s;
  if (s < 1e-4 * std::abs(a) && a > 0) {
    dks_over_s = -2.0 / (3.0 * a * a * a) + 4.0 * s * s / (5.0 * a * a * a * a * a);
  } else {
    dks_over_s = (a / r2 - lp.k) / (s * s);
  }
  const double dka = -1.0 / r2;

  const double kbar = lp.u.dot(g);
  Vec ubar = lp.k * g + (kbar * dks_over_s) * lp.u;
  double abar = kbar * dka;

  gq += ubar;
  abar -= p.dot(ubar);
  gp -= a * ubar;

  gp += abar * q;
  gq += abar * p;
}

void SphereManifold::dist_vjp(const Vec& p, const Vec& q, double g, Vec& gp, Vec& gq) const {
  const Vec dm = p - q;
  const Vec dp = p + q;
  const double A = dm.norm(), B = dp.norm();
  const double r2 = A * A + B * B;
  if (A > 0) {
    const double c = g * (2.0 * B / r2) / A;
    gp += c * dm;
    gq -= c * dm;
  }
  if (B > 0) {
    const double c = g * (-2.0 * A / r2) / B;
    gp += c * dp;
    gq += c * dp;
  }
}

void SphereManifold::inner_vjp(const Vec&, const Vec& x, const Vec& y, double g, Vec&, Vec& gx,
                               Vec& gy) const {
  gx += g * y;
  gy += g * x;
}

}  // namespace mgcn::detail
