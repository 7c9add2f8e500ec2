#pragma once

#include "mgcn/manifold.hpp"

namespace mgcn {

/// An isometry of one of the four feature manifolds.
///
///   Euclidean  p -> Q p + b   (Q orthogonal)
///   Sphere     p -> Q p       (Q orthogonal, (d+1) x (d+1))
///   Lorentz    p -> L p       (L orthochronous: preserves <.,.>_L and x_d > 0)
///   SPD        p -> g p g^T   (g invertible)
///
/// Tangent vectors are pushed forward by the differential, which is the
/// linear part of the action in every case.
class Isometry {
 public:
  Isometry(ManifoldKind kind, Mat linear, Vec shift = Vec());

  static Isometry identity(ManifoldKind kind);
  /// Random element of the full isometry group representation, including
  /// orientation-reversing components with probability 1/2.
  static Isometry random(ManifoldKind kind, Rng& rng);

  const ManifoldKind& kind() const { return kind_; }
  const Mat& linear() const { return linear_; }
  const Vec& shift() const { return shift_; }

  Vec apply(const Vec& p) const;
  Vec push(const Vec& x) const;
  /// Applies the isometry to every column of a feature matrix.
  Mat apply_columns(const Mat& points) const;
  Mat push_columns(const Mat& vectors) const;

  ManifoldPoint apply(const ManifoldPoint& p) const;
  TangentVector push(const TangentVector& x) const;

  /// (*this) o other
  Isometry compose(const Isometry& other) const;
  Isometry inverse() const;

  /// Largest deviation of the representation from its defining relations.
  double representation_residual() const;

 private:
  void require_kind(const ManifoldKind& k) const;

  ManifoldKind kind_;
  Mat linear_;
  Vec shift_;
};

}  // namespace mgcn
