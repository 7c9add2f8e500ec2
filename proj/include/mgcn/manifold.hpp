#pragma once

// Riemannian primitives for the four feature manifolds.
//
// Points and tangent vectors are stored in ambient coordinates:
//   Euclidean(d)  R^d
//   Sphere(d)     unit vectors in R^{d+1}
//   Lorentz(d)    x in R^{d+1} with <x,x>_L = -1, x_d > 0, signature (+,...,+,-)
//   SPD(n)        symmetric positive definite n x n matrices, flattened row-major
//
// The raw interface on Eigen vectors is what the layers use in their inner
// loops. The typed ManifoldPoint / TangentVector functions at the bottom check
// invariants and base points and are meant for library callers.

#include <Eigen/Dense>

#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mgcn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class ManifoldTag { Euclidean, Sphere, Lorentz, SPD };

struct ManifoldKind {
  ManifoldTag tag = ManifoldTag::Euclidean;
  int dim = 1;  // d, or n for SPD(n)

  static ManifoldKind euclidean(int d) { return {ManifoldTag::Euclidean, d}; }
  static ManifoldKind sphere(int d) { return {ManifoldTag::Sphere, d}; }
  static ManifoldKind lorentz(int d) { return {ManifoldTag::Lorentz, d}; }
  static ManifoldKind spd(int n) { return {ManifoldTag::SPD, n}; }

  int ambient_dim() const;
  /// Intrinsic dimension.
  int manifold_dim() const;
  bool is_hadamard() const { return tag != ManifoldTag::Sphere; }
  std::string name() const;
  /// Throws ContractViolation when d < 1 (n < 2 for SPD).
  void validate() const;

  friend bool operator==(const ManifoldKind&, const ManifoldKind&) = default;
};

/// Parses "euclidean", "sphere", "lorentz" or "spd" (case-insensitive).
ManifoldKind parse_manifold_kind(std::string_view name, int dim);

/// Abstract Riemannian manifold. All methods are pure and thread-safe.
class Manifold {
 public:
  explicit Manifold(ManifoldKind kind) : kind_(kind) {}
  virtual ~Manifold() = default;

  const ManifoldKind& kind() const { return kind_; }
  int ambient_dim() const { return kind_.ambient_dim(); }

  virtual double inner(const Vec& p, const Vec& x, const Vec& y) const = 0;
  double norm(const Vec& p, const Vec& x) const;

  virtual Vec exp(const Vec& p, const Vec& x) const = 0;
  /// Throws CutLocusError when q is (numerically) in the cut locus of p.
  virtual Vec log(const Vec& p, const Vec& q) const = 0;
  /// acc += w * log_p(q)
  virtual void add_log(const Vec& p, const Vec& q, double w, Vec& acc) const { acc += w * log(p, q); }
  virtual double dist(const Vec& p, const Vec& q) const = 0;
  virtual bool log_defined(const Vec& /*p*/, const Vec& /*q*/) const { return true; }

  /// Canonical base point: 0, the north pole e_d, o = e_d, or I.
  virtual Vec origin() const = 0;
  Vec zero_tangent() const { return Vec::Zero(ambient_dim()); }

  /// Deviation of p from the point invariants (0 for an exact point).
  virtual double point_residual(const Vec& p) const = 0;
  /// Deviation of x from the tangent space at p.
  virtual double tangent_residual(const Vec& p, const Vec& x) const = 0;
  /// Closest point (in a cheap, kind-specific sense) on the manifold.
  virtual Vec project_point(const Vec& p) const = 0;
  virtual Vec project_tangent(const Vec& p, const Vec& v) const = 0;

  virtual Vec random_point(Rng& rng) const = 0;
  /// Tangent vector whose coordinates in an orthonormal frame at p are
  /// i.i.d. N(0, scale^2).
  virtual Vec random_tangent(const Vec& p, double scale, Rng& rng) const = 0;

  // Vector-Jacobian products of the ambient formulas. Each accumulates
  // (adds) into the output gradients, which must be pre-sized.
  virtual void exp_vjp(const Vec& p, const Vec& x, const Vec& g, Vec& gp, Vec& gx) const = 0;
  virtual void log_vjp(const Vec& p, const Vec& q, const Vec& g, Vec& gp, Vec& gq) const = 0;
  virtual void dist_vjp(const Vec& p, const Vec& q, double g, Vec& gp, Vec& gq) const = 0;
  virtual void inner_vjp(const Vec& p, const Vec& x, const Vec& y, double g, Vec& gp, Vec& gx,
                         Vec& gy) const = 0;

 private:
  ManifoldKind kind_;
};

using ManifoldPtr = std::shared_ptr<const Manifold>;

ManifoldPtr make_manifold(ManifoldKind kind);

// ---------------------------------------------------------------------------
// Typed interface

struct ManifoldPoint {
  ManifoldKind kind;
  Vec coords;
};

struct TangentVector {
  ManifoldPoint base;
  Vec coords;
};

/// Invariant tolerances on points and tangent vectors.
inline constexpr double kPointTolerance = 1e-10;
inline constexpr double kSpdMinEigenvalue = 1e-12;

/// Throws ContractViolation unless the point satisfies its kind's invariants.
void check_point(const ManifoldPoint& p);
void check_tangent(const TangentVector& x);

double inner(const ManifoldPoint& p, const TangentVector& x, const TangentVector& y);
double norm(const TangentVector& x);
ManifoldPoint exp(const TangentVector& x);
TangentVector log(const ManifoldPoint& p, const ManifoldPoint& q);
double dist(const ManifoldPoint& p, const ManifoldPoint& q);

ManifoldPoint random_point(ManifoldKind kind, Rng& rng);
TangentVector random_tangent(const ManifoldPoint& p, double scale, Rng& rng);

// ---------------------------------------------------------------------------
// Helpers shared by the SPD implementation and tests.

namespace linalg {

/// Eigendecomposition of a symmetric matrix.
struct SymEig {
  Vec values;
  Mat vectors;
};

SymEig sym_eig(const Mat& a);

/// U diag(f(lambda)) U^T.
template <class F>
Mat sym_apply(const SymEig& e, F&& f) {
  Vec fv(e.values.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(e.values(i));
  return e.vectors * fv.asDiagonal() * e.vectors.transpose();
}

/// Adjoint of the Frechet derivative of the spectral function A -> f(A) at
/// A = U diag(lambda) U^T, applied to a (symmetrized) cotangent g.
Mat sym_apply_adjoint(const SymEig& e, const Mat& g, double (*f)(double), double (*fprime)(double));

inline Mat as_matrix(const Vec& v, int n) { return Eigen::Map<const Mat>(v.data(), n, n); }
inline Vec as_vector(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

/// Lorentz form <x,y>_L with signature (+,...,+,-).
inline double minkowski(const Vec& x, const Vec& y) {
  const Eigen::Index t = x.size() - 1;
  return x.head(t).dot(y.head(t)) - x(t) * y(t);
}

/// Haar-distributed orthogonal matrix; det = -1 with probability 1/2.
Mat random_orthogonal(int n, Rng& rng);

}  // namespace linalg

}  // namespace mgcn
