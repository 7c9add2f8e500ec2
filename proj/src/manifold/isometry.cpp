#include "mgcn/isometry.hpp"

#include <cmath>

#include "mgcn/errors.hpp"

namespace mgcn {

using linalg::as_matrix;
using linalg::as_vector;

namespace {

Mat lorentz_metric(int n) {
  Mat j = Mat::Identity(n, n);
  j(n - 1, n - 1) = -1.0;
  return j;
}

int linear_size(const ManifoldKind& k) {
  return k.tag == ManifoldTag::SPD ? k.dim : k.ambient_dim();
}

}  // namespace

Isometry::Isometry(ManifoldKind kind, Mat linear, Vec shift)
    : kind_(kind), linear_(std::move(linear)), shift_(std::move(shift)) {
  kind_.validate();
  const int n = linear_size(kind_);
  if (linear_.rows() != n || linear_.cols() != n) {
    throw ContractViolation("isometry linear part has wrong shape for " + kind_.name());
  }
  if (kind_.tag == ManifoldTag::Euclidean) {
    if (shift_.size() == 0) shift_ = Vec::Zero(n);
    if (shift_.size() != n) throw ContractViolation("isometry shift has wrong size");
  } else if (shift_.size() != 0) {
    throw ContractViolation("only Euclidean isometries carry a translation");
  }
}

Isometry Isometry::identity(ManifoldKind kind) {
  const int n = linear_size(kind);
  return Isometry(kind, Mat::Identity(n, n));
}

Isometry Isometry::random(ManifoldKind kind, Rng& rng) {
  kind.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (kind.tag) {
    case ManifoldTag::Euclidean: {
      Vec b(kind.dim);
      for (int i = 0; i < kind.dim; ++i) b(i) = normal(rng);
      return Isometry(kind, linalg::random_orthogonal(kind.dim, rng), b);
    }
    case ManifoldTag::Sphere:
      return Isometry(kind, linalg::random_orthogonal(kind.dim + 1, rng));
    case ManifoldTag::Lorentz: {
      // rotation/reflection . boost . rotation/reflection
      const int d = kind.dim;
      auto spatial = [&] {
        Mat r = Mat::Identity(d + 1, d + 1);
        r.topLeftCorner(d, d) = linalg::random_orthogonal(d, rng);
        return r;
      };
      Vec dir(d);
      do {
        for (int i = 0; i < d; ++i) dir(i) = normal(rng);
      } while (dir.norm() < 1e-8);
      dir /= dir.norm();
      const double phi = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      Mat boost = Mat::Identity(d + 1, d + 1);
      boost.topLeftCorner(d, d) += (std::cosh(phi) - 1.0) * dir * dir.transpose();
      boost.topRightCorner(d, 1) = std::sinh(phi) * dir;
      boost.bottomLeftCorner(1, d) = std::sinh(phi) * dir.transpose();
      boost(d, d) = std::cosh(phi);
      return Isometry(kind, spatial() * boost * spatial());
    }
    case ManifoldTag::SPD: {
      const int n = kind.dim;
      Vec s(n);
      for (int i = 0; i < n; ++i) s(i) = std::exp(0.3 * normal(rng));
      Mat g = linalg::random_orthogonal(n, rng) * s.asDiagonal() * linalg::random_orthogonal(n, rng);
      return Isometry(kind, g);
    }
  }
  throw ContractViolation("unknown manifold tag");
}

Vec Isometry::apply(const Vec& p) const {
  switch (kind_.tag) {
    case ManifoldTag::Euclidean: return linear_ * p + shift_;
    case ManifoldTag::Sphere:
    case ManifoldTag::Lorentz: return linear_ * p;
    case ManifoldTag::SPD: {
      const Mat m = linear_ * as_matrix(p, kind_.dim) * linear_.transpose();
      return as_vector(0.5 * (m + m.transpose()));
    }
  }
  return p;
}

Vec Isometry::push(const Vec& x) const {
  if (kind_.tag == ManifoldTag::SPD) {
    const Mat m = linear_ * as_matrix(x, kind_.dim) * linear_.transpose();
    return as_vector(0.5 * (m + m.transpose()));
  }
  return linear_ * x;
}

Mat Isometry::apply_columns(const Mat& points) const {
  Mat out(points.rows(), points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) out.col(j) = apply(Vec(points.col(j)));
  return out;
}

Mat Isometry::push_columns(const Mat& vectors) const {
  Mat out(vectors.rows(), vectors.cols());
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) out.col(j) = push(Vec(vectors.col(j)));
  return out;
}

void Isometry::require_kind(const ManifoldKind& k) const {
  if (!(k == kind_)) {
    throw ContractViolation("isometry of " + kind_.name() + " applied to a point of " + k.name());
  }
}

ManifoldPoint Isometry::apply(const ManifoldPoint& p) const {
  require_kind(p.kind);
  return {kind_, apply(p.coords)};
}

TangentVector Isometry::push(const TangentVector& x) const {
  require_kind(x.base.kind);
  return {apply(x.base), push(x.coords)};
}

Isometry Isometry::compose(const Isometry& other) const {
  require_kind(other.kind_);
  if (kind_.tag == ManifoldTag::Euclidean) {
    return Isometry(kind_, linear_ * other.linear_, linear_ * other.shift_ + shift_);
  }
  return Isometry(kind_, linear_ * other.linear_);
}

Isometry Isometry::inverse() const {
  switch (kind_.tag) {
    case ManifoldTag::Euclidean: {
      Mat qt = linear_.transpose();
      return Isometry(kind_, qt, -(qt * shift_));
    }
    case ManifoldTag::Sphere: return Isometry(kind_, linear_.transpose());
    case ManifoldTag::Lorentz: {
      const Mat j = lorentz_metric(kind_.dim + 1);
      return Isometry(kind_, j * linear_.transpose() * j);
    }
    case ManifoldTag::SPD: return Isometry(kind_, linear_.inverse());
  }
  return *this;
}

double Isometry::representation_residual() const {
  const int n = static_cast<int>(linear_.rows());
  switch (kind_.tag) {
    case ManifoldTag::Euclidean:
    case ManifoldTag::Sphere:
      return (linear_.transpose() * linear_ - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
    case ManifoldTag::Lorentz: {
      const Mat j = lorentz_metric(n);
      double r = (linear_.transpose() * j * linear_ - j).cwiseAbs().maxCoeff();
      if (!(linear_(n - 1, n - 1) > 0)) r = std::max(r, 1.0);
      return r;
    }
    case ManifoldTag::SPD: {
      const double det = linear_.determinant();
      return std::abs(det) > 1e-12 ? 0.0 : 1.0;
    }
  }
  return 0.0;
}

}  // namespace mgcn
