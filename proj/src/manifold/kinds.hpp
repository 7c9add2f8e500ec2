#pragma once

#include "mgcn/manifold.hpp"

namespace mgcn::detail {

class EuclideanManifold final : public Manifold {
 public:
  explicit EuclideanManifold(int d) : Manifold(ManifoldKind::euclidean(d)) {}

  double inner(const Vec& p, const Vec& x, const Vec& y) const override;
  Vec exp(const Vec& p, const Vec& x) const override;
  Vec log(const Vec& p, const Vec& q) const override;
  double dist(const Vec& p, const Vec& q) const override;
  Vec origin() const override;
  double point_residual(const Vec& p) const override;
  double tangent_residual(const Vec& p, const Vec& x) const override;
  Vec project_point(const Vec& p) const override { return p; }
  Vec project_tangent(const Vec&, const Vec& v) const override { return v; }
  Vec random_point(Rng& rng) const override;
  Vec random_tangent(const Vec& p, double scale, Rng& rng) const override;
  void exp_vjp(const Vec& p, const Vec& x, const Vec& g, Vec& gp, Vec& gx) const override;
  void log_vjp(const Vec& p, const Vec& q, const Vec& g, Vec& gp, Vec& gq) const override;
  void dist_vjp(const Vec& p, const Vec& q, double g, Vec& gp, Vec& gq) const override;
  void inner_vjp(const Vec& p, const Vec& x, const Vec& y, double g, Vec& gp, Vec& gx,
                 Vec& gy) const override;
};

class SphereManifold final : public Manifold {
 public:
  explicit SphereManifold(int d) : Manifold(ManifoldKind::sphere(d)) {}

  /// Points with dist(p, q) > pi - kCutLocusTolerance count as antipodal.
  static constexpr double kCutLocusTolerance = 1e-8;

  double inner(const Vec& p, const Vec& x, const Vec& y) const override;
  Vec exp(const Vec& p, const Vec& x) const override;
  Vec log(const Vec& p, const Vec& q) const override;
  double dist(const Vec& p, const Vec& q) const override;
  bool log_defined(const Vec& p, const Vec& q) const override;
  Vec origin() const override;
  double point_residual(const Vec& p) const override;
  double tangent_residual(const Vec& p, const Vec& x) const override;
  Vec project_point(const Vec& p) const override;
  Vec project_tangent(const Vec& p, const Vec& v) const override;
  Vec random_point(Rng& rng) const override;
  Vec random_tangent(const Vec& p, double scale, Rng& rng) const override;
  void exp_vjp(const Vec& p, const Vec& x, const Vec& g, Vec& gp, Vec& gx) const override;
  void log_vjp(const Vec& p, const Vec& q, const Vec& g, Vec& gp, Vec& gq) const override;
  void dist_vjp(const Vec& p, const Vec& q, double g, Vec& gp, Vec& gq) const override;
  void inner_vjp(const Vec& p, const Vec& x, const Vec& y, double g, Vec& gp, Vec& gx,
                 Vec& gy) const override;
};

class LorentzManifold final : public Manifold {
 public:
  explicit LorentzManifold(int d) : Manifold(ManifoldKind::lorentz(d)) {}

  double inner(const Vec& p, const Vec& x, const Vec& y) const override;
  Vec exp(const Vec& p, const Vec& x) const override;
  Vec log(const Vec& p, const Vec& q) const override;
  void add_log(const Vec& p, const Vec& q, double w, Vec& acc) const override;
  double dist(const Vec& p, const Vec& q) const override;
  Vec origin() const override;
  double point_residual(const Vec& p) const override;
  double tangent_residual(const Vec& p, const Vec& x) const override;
  Vec project_point(const Vec& p) const override;
  Vec project_tangent(const Vec& p, const Vec& v) const override;
  Vec random_point(Rng& rng) const override;
  Vec random_tangent(const Vec& p, double scale, Rng& rng) const override;
  void exp_vjp(const Vec& p, const Vec& x, const Vec& g, Vec& gp, Vec& gx) const override;
  void log_vjp(const Vec& p, const Vec& q, const Vec& g, Vec& gp, Vec& gq) const override;
  void dist_vjp(const Vec& p, const Vec& q, double g, Vec& gp, Vec& gq) const override;
  void inner_vjp(const Vec& p, const Vec& x, const Vec& y, double g, Vec& gp, Vec& gx,
                 Vec& gy) const override;
};

class SpdManifold final : public Manifold {
 public:
  explicit SpdManifold(int n) : Manifold(ManifoldKind::spd(n)), n_(n) {}

  double inner(const Vec& p, const Vec& x, const Vec& y) const override;
  Vec exp(const Vec& p, const Vec& x) const override;
  Vec log(const Vec& p, const Vec& q) const override;
  double dist(const Vec& p, const Vec& q) const override;
  Vec origin() const override;
  double point_residual(const Vec& p) const override;
  double tangent_residual(const Vec& p, const Vec& x) const override;
  Vec project_point(const Vec& p) const override;
  Vec project_tangent(const Vec& p, const Vec& v) const override;
  Vec random_point(Rng& rng) const override;
  Vec random_tangent(const Vec& p, double scale, Rng& rng) const override;
  void exp_vjp(const Vec& p, const Vec& x, const Vec& g, Vec& gp, Vec& gx) const override;
  void log_vjp(const Vec& p, const Vec& q, const Vec& g, Vec& gp, Vec& gq) const override;
  void dist_vjp(const Vec& p, const Vec& q, double g, Vec& gp, Vec& gq) const override;
  void inner_vjp(const Vec& p, const Vec& x, const Vec& y, double g, Vec& gp, Vec& gx,
                 Vec& gy) const override;

 private:
  int n_;
};

}  // namespace mgcn::detail
