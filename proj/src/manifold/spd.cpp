#include <cmath>
#include <limits>

#include "kinds.hpp"

namespace mgcn::detail {

using linalg::as_matrix;
using linalg::as_vector;
using linalg::sym_apply;
using linalg::sym_apply_adjoint;
using linalg::sym_eig;
using linalg::SymEig;

namespace {

constexpr double kFloor = kSpdMinEigenvalue;

double clamp_ev(double x) { return std::max(x, kFloor); }
double f_sqrt(double x) { return std::sqrt(clamp_ev(x)); }
double df_sqrt(double x) { return 0.5 / std::sqrt(clamp_ev(x)); }
double f_isqrt(double x) { return 1.0 / std::sqrt(clamp_ev(x)); }
double df_isqrt(double x) { return -0.5 / (clamp_ev(x) * std::sqrt(clamp_ev(x))); }
double f_exp(double x) { return std::exp(x); }
double f_log(double x) { return std::log(clamp_ev(x)); }
double df_log(double x) { return 1.0 / clamp_ev(x); }

Mat sym(const Mat& a) { return 0.5 * (a + a.transpose()); }

// Square root and inverse square root of an SPD base point.
struct BaseRoots {
  SymEig eig;
  Mat s;
  Mat si;
};

BaseRoots base_roots(const Mat& p) {
  BaseRoots r{sym_eig(p), {}, {}};
  r.s = sym_apply(r.eig, f_sqrt);
  r.si = sym_apply(r.eig, f_isqrt);
  return r;
}

}  // namespace

double SpdManifold::inner(const Vec& p, const Vec& x, const Vec& y) const {
  Eigen::LLT<Mat> llt(as_matrix(p, n_));
  const Mat a = llt.solve(as_matrix(x, n_));
  const Mat b = llt.solve(as_matrix(y, n_));
  return (a.array() * b.transpose().array()).sum();
}

Vec SpdManifold::exp(const Vec& p, const Vec& x) const {
  if (x.isZero(0.0)) return p;
  const BaseRoots r = base_roots(as_matrix(p, n_));
  const Mat m = r.si * as_matrix(x, n_) * r.si;
  const Mat e = sym_apply(sym_eig(m), f_exp);
  return as_vector(sym(r.s * e * r.s));
}

Vec SpdManifold::log(const Vec& p, const Vec& q) const {
  if (p == q) return zero_tangent();
  const BaseRoots r = base_roots(as_matrix(p, n_));
  const Mat m = r.si * as_matrix(q, n_) * r.si;
  const Mat l = sym_apply(sym_eig(m), f_log);
  return as_vector(sym(r.s * l * r.s));
}

double SpdManifold::dist(const Vec& p, const Vec& q) const {
  const BaseRoots r = base_roots(as_matrix(p, n_));
  const Mat m = r.si * as_matrix(q, n_) * r.si;
  const Vec ev = sym_eig(m).values;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double l = f_log(ev(i));
    acc += l * l;
  }
  return std::sqrt(acc);
}

Vec SpdManifold::origin() const { return as_vector(Mat::Identity(n_, n_)); }

double SpdManifold::point_residual(const Vec& p) const {
  const Mat m = as_matrix(p, n_);
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double min_ev = sym_eig(m).values.minCoeff();
  if (!(min_ev > kFloor)) return std::numeric_limits<double>::infinity();
  return asym / std::max(1.0, m.cwiseAbs().maxCoeff());
}

double SpdManifold::tangent_residual(const Vec&, const Vec& x) const {
  const Mat m = as_matrix(x, n_);
  return (m - m.transpose()).cwiseAbs().maxCoeff() / std::max(1.0, m.cwiseAbs().maxCoeff());
}

Vec SpdManifold::project_point(const Vec& p) const {
  return as_vector(sym_apply(sym_eig(as_matrix(p, n_)), clamp_ev));
}

Vec SpdManifold::project_tangent(const Vec&, const Vec& v) const {
  return as_vector(sym(as_matrix(v, n_)));
}

Vec SpdManifold::random_point(Rng& rng) const {
  return exp(origin(), random_tangent(origin(), 0.5, rng));
}

Vec SpdManifold::random_tangent(const Vec& p, double scale, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, scale);
  Mat g(n_, n_);
  for (int i = 0; i < n_; ++i) {
    g(i, i) = normal(rng);
    for (int j = i + 1; j < n_; ++j) {
      g(i, j) = g(j, i) = normal(rng) / std::sqrt(2.0);
    }
  }
  const Mat s = sym_apply(sym_eig(as_matrix(p, n_)), f_sqrt);
  return as_vector(sym(s * g * s));
}

void SpdManifold::exp_vjp(const Vec& p, const Vec& x, const Vec& g, Vec& gp, Vec& gx) const {
  const BaseRoots r = base_roots(as_matrix(p, n_));
  const Mat xm = as_matrix(x, n_);
  const Mat m = r.si * xm * r.si;
  const SymEig em = sym_eig(m);
  const Mat e = sym_apply(em, f_exp);
  const Mat gm = sym(as_matrix(g, n_));

  const Mat sbar = gm * r.s * e + e * r.s * gm;
  const Mat ebar = r.s * gm * r.s;
  const Mat mbar = sym_apply_adjoint(em, ebar, f_exp, f_exp);
  const Mat xbar = r.si * mbar * r.si;
  const Mat sibar = mbar * r.si * xm + xm * r.si * mbar;
  const Mat pbar = sym_apply_adjoint(r.eig, sbar, f_sqrt, df_sqrt) +
                   sym_apply_adjoint(r.eig, sibar, f_isqrt, df_isqrt);
  gp += as_vector(sym(pbar));
  gx += as_vector(sym(xbar));
}

void SpdManifold::log_vjp(const Vec& p, const Vec& q, const Vec& g, Vec& gp, Vec& gq) const {
  const BaseRoots r = base_roots(as_matrix(p, n_));
  const Mat qm = as_matrix(q, n_);
  const Mat m = r.si * qm * r.si;
  const SymEig em = sym_eig(m);
  const Mat l = sym_apply(em, f_log);
  const Mat gm = sym(as_matrix(g, n_));

  const Mat sbar = gm * r.s * l + l * r.s * gm;
  const Mat lbar = r.s * gm * r.s;
  const Mat mbar = sym_apply_adjoint(em, lbar, f_log, df_log);
  const Mat qbar = r.si * mbar * r.si;
  const Mat sibar = mbar * r.si * qm + qm * r.si * mbar;
  const Mat pbar = sym_apply_adjoint(r.eig, sbar, f_sqrt, df_sqrt) +
                   sym_apply_adjoint(r.eig, sibar, f_isqrt, df_isqrt);
  gp += as_vector(sym(pbar));
  gq += as_vector(sym(qbar));
}

void SpdManifold::dist_vjp(const Vec& p, const Vec& q, double g, Vec& gp, Vec& gq) const {
  const BaseRoots r = base_roots(as_matrix(p, n_));
  const Mat qm = as_matrix(q, n_);
  const Mat m = r.si * qm * r.si;
  const SymEig em = sym_eig(m);
  const Mat l = sym_apply(em, f_log);
  const double d = l.norm();
  if (d == 0.0) return;
  const Mat mbar = sym_apply_adjoint(em, (g / d) * l, f_log, df_log);
  const Mat qbar = r.si * mbar * r.si;
  const Mat sibar = mbar * r.si * qm + qm * r.si * mbar;
  const Mat pbar = sym_apply_adjoint(r.eig, sibar, f_isqrt, df_isqrt);
  gp += as_vector(sym(pbar));
  gq += as_vector(sym(qbar));
}

void SpdManifold::inner_vjp(const Vec& p, const Vec& x, const Vec& y, double g, Vec& gp, Vec& gx,
                            Vec& gy) const {
  const Mat a = as_matrix(p, n_).llt().solve(Mat::Identity(n_, n_));
  const Mat xm = as_matrix(x, n_);
  const Mat ym = as_matrix(y, n_);
  gx += as_vector(sym(g * a * ym * a));
  gy += as_vector(sym(g * a * xm * a));
  const Mat abar = g * (xm * a * ym + ym * a * xm);
  gp += as_vector(sym(-a * abar * a));
}

}  // namespace mgcn::detail
