#include <cmath>
#include <limits>

#include "kinds.hpp"

namespace mgcn::detail {

using linalg::minkowski;

namespace {

Vec flip_time(const Vec& x) {
  Vec y = x;
  y(y.size() - 1) = -y(y.size() - 1);
  return y;
}

// sinh(n)/n
double sinhc(double n) { return std::abs(n) < 1e-4 ? 1.0 + n * n / 6.0 : std::sinh(n) / n; }

// (d/dn sinhc(n)) / n
double sinhc_d_over_n(double n) {
  if (std::abs(n) < 1e-3) return 1.0 / 3.0 + n * n / 30.0;
  return (n * std::cosh(n) - std::sinh(n)) / (n * n * n);
}

// asinh(s)/s
double asinhc(double s) {
  if (s < 1e-4) return 1.0 - s * s / 6.0 + 3.0 * s * s * s * s / 40.0;
  return std::asinh(s) / s;
}

// (d/ds asinhc(s)) / s
double asinhc_d_over_s(double s) {
  if (s < 1e-3) return -1.0 / 3.0 + 3.0 * s * s / 10.0;
  return (s / std::sqrt(1.0 + s * s) - std::asinh(s)) / (s * s * s);
}

}  // namespace

double LorentzManifold::inner(const Vec&, const Vec& x, const Vec& y) const {
  return minkowski(x, y);
}

Vec LorentzManifold::exp(const Vec& p, const Vec& x) const {
  const double n = std::sqrt(std::max(0.0, minkowski(x, x)));
  if (n == 0.0) return p;
  Vec r = std::cosh(n) * p + sinhc(n) * x;
  return project_point(r);
}

namespace {

// b = <p,q> and s = |q + b p| without forming q + b p
void log_parts(const Vec& p, const Vec& q, double& b, double& s) {
  b = minkowski(p, q);
  const Eigen::Index t = p.size() - 1;
  double s2 = 0.0;
  for (Eigen::Index i = 0; i < t; ++i) {
    const double u = q(i) + b * p(i);
    s2 += u * u;
  }
  const double ut = q(t) + b * p(t);
  s = std::sqrt(std::max(0.0, s2 - ut * ut));
}

}  // namespace

Vec LorentzManifold::log(const Vec& p, const Vec& q) const {
  if (p == q) return zero_tangent();
  double b = 0.0, s = 0.0;
  log_parts(p, q, b, s);
  return asinhc(s) * (q + b * p);
}

void LorentzManifold::add_log(const Vec& p, const Vec& q, double w, Vec& acc) const {
  if (p == q) return;
  double b = 0.0, s = 0.0;
  log_parts(p, q, b, s);
  const double k = w * asinhc(s);
  acc += k * q + (k * b) * p;
}

double LorentzManifold::dist(const Vec& p, const Vec& q) const {
  const Vec d = p - q;
  const double m = std::max(0.0, minkowski(d, d));
  return 2.0 * std::asinh(0.5 * std::sqrt(m));
}

Vec LorentzManifold::origin() const {
  Vec o = Vec::Zero(ambient_dim());
  o(ambient_dim() - 1) = 1.0;
  return o;
}

double LorentzManifold::point_residual(const Vec& p) const {
  const double t = p(p.size() - 1);
  if (!(t > 0)) return std::numeric_limits<double>::infinity();
  return std::abs(minkowski(p, p) + 1.0) / std::max(1.0, t * t);
}

double LorentzManifold::tangent_residual(const Vec& p, const Vec& x) const {
  return std::abs(minkowski(p, x)) / std::max(1.0, p.norm() * x.norm());
}

Vec LorentzManifold::project_point(const Vec& p) const {
  Vec r = p;
  const Eigen::Index t = r.size() - 1;
  r(t) = std::sqrt(1.0 + r.head(t).squaredNorm());
  return r;
}

Vec LorentzManifold::project_tangent(const Vec& p, const Vec& v) const {
  return v + minkowski(p, v) * p;
}

Vec LorentzManifold::random_point(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> radius(0.0, 1.5);
  const int d = kind().dim;
  Vec dir(d);
  do {
    for (int i = 0; i < d; ++i) dir(i) = normal(rng);
  } while (dir.norm() < 1e-8);
  Vec x = Vec::Zero(d + 1);
  x.head(d) = radius(rng) * dir / dir.norm();
  return exp(origin(), x);
}

Vec LorentzManifold::random_tangent(const Vec& p, double scale, Rng& rng) const {
  // Gaussian in the frame at the origin, carried to p by the boost o -> p.
  std::normal_distribution<double> normal(0.0, scale);
  const int d = kind().dim;
  Vec w(d);
  for (int i = 0; i < d; ++i) w(i) = normal(rng);
  const Vec ps = p.head(d);
  const double pt = p(d);
  const double c = ps.dot(w);
  Vec x(d + 1);
  x.head(d) = w + (c / (1.0 + pt)) * ps;
  x(d) = c;
  return x;
}

void LorentzManifold::exp_vjp(const Vec& p, const Vec& x, const Vec& g, Vec& gp, Vec& gx) const {
  const double n = std::sqrt(std::max(0.0, minkowski(x, x)));
  const double sc = sinhc(n);
  const double c = sc * p.dot(g) + sinhc_d_over_n(n) * x.dot(g);
  const Eigen::Index t = x.size() - 1;
  gp += std::cosh(n) * g;
  gx += sc * g + c * x;
  gx(t) -= 2.0 * c * x(t);
}

void LorentzManifold::log_vjp(const Vec& p, const Vec& q, const Vec& g, Vec& gp, Vec& gq) const {
  const Eigen::Index t = p.size() - 1;
  const double b = minkowski(p, q);
  const Vec u = q + b * p;
  const double s = std::sqrt(std::max(0.0, minkowski(u, u)));
  const double k = asinhc(s);

  // ubar = k g + kbar asinhc'(s)/s J u, with J flipping the time coordinate
  const double a = u.dot(g) * asinhc_d_over_s(s);
  Vec ubar = k * g + a * u;
  ubar(t) -= 2.0 * a * u(t);

  const double bbar = p.dot(ubar);
  gq += ubar + bbar * p;
  gq(t) -= 2.0 * bbar * p(t);
  gp += b * ubar + bbar * q;
  gp(t) -= 2.0 * bbar * q(t);
}

void LorentzManifold::dist_vjp(const Vec& p, const Vec& q, double g, Vec& gp, Vec& gq) const {
  const Vec d = p - q;
  const double m = std::max(0.0, minkowski(d, d));
  if (m == 0.0) return;
  const double c = g / (std::sqrt(m) * std::sqrt(1.0 + 0.25 * m));
  const Vec jd = flip_time(d);
  gp += c * jd;
  gq -= c * jd;
}

void LorentzManifold::inner_vjp(const Vec&, const Vec& x, const Vec& y, double g, Vec&, Vec& gx,
                                Vec& gy) const {
  gx += g * flip_time(y);
  gy += g * flip_time(x);
}

}  // namespace mgcn::detail
