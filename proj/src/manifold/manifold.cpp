#include "mgcn/manifold.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "kinds.hpp"
#include "mgcn/errors.hpp"

namespace mgcn {

int ManifoldKind::ambient_dim() const {
  switch (tag) {
    case ManifoldTag::Euclidean: return dim;
    case ManifoldTag::Sphere:
    case ManifoldTag::Lorentz: return dim + 1;
    case ManifoldTag::SPD: return dim * dim;
  }
  return dim;
}

int ManifoldKind::manifold_dim() const {
  return tag == ManifoldTag::SPD ? dim * (dim + 1) / 2 : dim;
}

std::string ManifoldKind::name() const {
  switch (tag) {
    case ManifoldTag::Euclidean: return "euclidean";
    case ManifoldTag::Sphere: return "sphere";
    case ManifoldTag::Lorentz: return "lorentz";
    case ManifoldTag::SPD: return "spd";
  }
  return "unknown";
}

void ManifoldKind::validate() const {
  if (tag == ManifoldTag::SPD ? dim < 2 : dim < 1) {
    throw ContractViolation("invalid dimension " + std::to_string(dim) + " for manifold " + name());
  }
}

ManifoldKind parse_manifold_kind(std::string_view name, int dim) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  ManifoldKind k;
  if (s == "euclidean") k = ManifoldKind::euclidean(dim);
  else if (s == "sphere") k = ManifoldKind::sphere(dim);
  else if (s == "lorentz" || s == "hyperbolic") k = ManifoldKind::lorentz(dim);
  else if (s == "spd") k = ManifoldKind::spd(dim);
  else throw ContractViolation("unknown manifold kind '" + s + "'");
  k.validate();
  return k;
}

double Manifold::norm(const Vec& p, const Vec& x) const {
  return std::sqrt(std::max(0.0, inner(p, x, x)));
}

ManifoldPtr make_manifold(ManifoldKind kind) {
  kind.validate();
  switch (kind.tag) {
    case ManifoldTag::Euclidean: return std::make_shared<detail::EuclideanManifold>(kind.dim);
    case ManifoldTag::Sphere: return std::make_shared<detail::SphereManifold>(kind.dim);
    case ManifoldTag::Lorentz: return std::make_shared<detail::LorentzManifold>(kind.dim);
    case ManifoldTag::SPD: return std::make_shared<detail::SpdManifold>(kind.dim);
  }
  throw ContractViolation("unknown manifold tag");
}

// ---------------------------------------------------------------------------

void check_point(const ManifoldPoint& p) {
  p.kind.validate();
  if (p.coords.size() != p.kind.ambient_dim()) {
    throw ContractViolation("point has " + std::to_string(p.coords.size()) +
                            " coordinates, expected " + std::to_string(p.kind.ambient_dim()));
  }
  if (!p.coords.allFinite()) throw ContractViolation("point has non-finite coordinates");
  const double r = make_manifold(p.kind)->point_residual(p.coords);
  if (!(r <= kPointTolerance)) {
    throw ContractViolation("point violates " + p.kind.name() + " invariants (residual " +
                            std::to_string(r) + ")");
  }
}

void check_tangent(const TangentVector& x) {
  check_point(x.base);
  if (x.coords.size() != x.base.kind.ambient_dim()) {
    throw ContractViolation("tangent vector has wrong coordinate count");
  }
  const double r = make_manifold(x.base.kind)->tangent_residual(x.base.coords, x.coords);
  if (!(r <= kPointTolerance)) {
    throw ContractViolation("vector is not tangent at its base point (residual " +
                            std::to_string(r) + ")");
  }
}

namespace {

void require_same_base(const ManifoldPoint& p, const TangentVector& x) {
  if (!(p.kind == x.base.kind) || p.coords.size() != x.base.coords.size() ||
      (p.coords - x.base.coords).lpNorm<Eigen::Infinity>() > 0.0) {
    throw ContractViolation("tangent vector is not based at the given point");
  }
}

}  // namespace

double inner(const ManifoldPoint& p, const TangentVector& x, const TangentVector& y) {
  check_tangent(x);
  require_same_base(p, x);
  require_same_base(p, y);
  return make_manifold(p.kind)->inner(p.coords, x.coords, y.coords);
}

double norm(const TangentVector& x) {
  check_tangent(x);
  return make_manifold(x.base.kind)->norm(x.base.coords, x.coords);
}

ManifoldPoint exp(const TangentVector& x) {
  check_tangent(x);
  return {x.base.kind, make_manifold(x.base.kind)->exp(x.base.coords, x.coords)};
}

TangentVector log(const ManifoldPoint& p, const ManifoldPoint& q) {
  check_point(p);
  check_point(q);
  if (!(p.kind == q.kind)) throw ContractViolation("log between points of different manifolds");
  return {p, make_manifold(p.kind)->log(p.coords, q.coords)};
}

double dist(const ManifoldPoint& p, const ManifoldPoint& q) {
  check_point(p);
  check_point(q);
  if (!(p.kind == q.kind)) throw ContractViolation("dist between points of different manifolds");
  return make_manifold(p.kind)->dist(p.coords, q.coords);
}

ManifoldPoint random_point(ManifoldKind kind, Rng& rng) {
  return {kind, make_manifold(kind)->random_point(rng)};
}

TangentVector random_tangent(const ManifoldPoint& p, double scale, Rng& rng) {
  if (!(scale > 0)) throw ContractViolation("random_tangent: scale must be positive");
  return {p, make_manifold(p.kind)->random_tangent(p.coords, scale, rng)};
}

// ---------------------------------------------------------------------------

namespace linalg {

SymEig sym_eig(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (a + a.transpose()));
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Mat sym_apply_adjoint(const SymEig& e, const Mat& g, double (*f)(double), double (*fprime)(double)) {
  const Eigen::Index n = e.values.size();
  const Mat& u = e.vectors;
  Mat gs = u.transpose() * (0.5 * (g + g.transpose())) * u;
  Vec fv = e.values.unaryExpr(f);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double li = e.values(i), lj = e.values(j);
      const double gap = li - lj;
      double k;
      if (std::abs(gap) > 1e-5 * std::max(1.0, std::max(std::abs(li), std::abs(lj)))) {
        k = (fv(i) - fv(j)) / gap;
      } else {
        k = fprime(0.5 * (li + lj));
      }
      gs(i, j) *= k;
    }
  }
  return u * gs * u.transpose();
}

Mat random_orthogonal(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  }
  // Fix the determinant to a fair coin so reflections are covered.
  const bool want_reflection = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  const bool is_reflection = q.determinant() < 0;
  if (want_reflection != is_reflection) q.col(0) = -q.col(0);
  return q;
}

}  // namespace linalg

}  // namespace mgcn
