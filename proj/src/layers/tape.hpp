#pragma once

// Reverse-mode tape over vector-valued nodes. Scalars are vectors of length 1.
// Every op evaluates eagerly and records a closure that propagates the output
// cotangent to its inputs.

#include <functional>
#include <vector>

#include "mgcn/manifold.hpp"

namespace mgcn::detail {

class Tape {
 public:
  using Id = int;

  /// Coefficient `scale * value(coef)` (or `scale` alone when coef < 0)
  /// multiplying node `vec`.
  struct Term {
    Id coef = -1;
    double scale = 1.0;
    Id vec = -1;
  };

  Id leaf(Vec v);
  Id constant_scalar(double x) { return leaf(Vec::Constant(1, x)); }

  const Vec& value(Id id) const { return values_[id]; }
  double scalar(Id id) const { return values_[id](0); }
  const Vec& grad(Id id) const { return grads_[id]; }
  std::size_t size() const { return values_.size(); }

  Id exp(const Manifold& m, Id p, Id x);
  Id log(const Manifold& m, Id p, Id q);
  Id dist(const Manifold& m, Id p, Id q);
  Id inner(const Manifold& m, Id p, Id x, Id y);
  /// |x|_p
  Id norm(const Manifold& m, Id p, Id x);

  /// Weighted Frechet mean of point nodes with scalar weight nodes. The
  /// gradient differentiates through the accepted iteration steps.
  Id frechet(const Manifold& m, const std::vector<Id>& pts, const std::vector<Id>& weights);

  Id lincomb(std::vector<Term> terms, Eigen::Index size);
  /// v / s for a scalar node s.
  Id divide(Id v, Id s);
  Id leaky_relu(Id v, double slope);
  Id softmax(Id logits);
  Id log_softmax(Id logits);
  Id slice(Id v, Eigen::Index offset, Eigen::Index length);
  Id element(Id v, Eigen::Index i) { return slice(v, i, 1); }
  Id concat(const std::vector<Id>& parts);
  /// Largest scalar among `parts` (first on ties).
  Id max(const std::vector<Id>& parts);
  /// W x + b, W stored row-major in node `w` with `rows` rows.
  Id affine(Id w, Id b, Id x, Eigen::Index rows);

  /// Seeds d(out) = 1 for a scalar node and propagates to every node.
  void backward(Id out);

 private:
  Id push(Vec v, std::function<void(Tape&, Id)> back);

  std::vector<Vec> values_;
  std::vector<Vec> grads_;
  std::vector<std::function<void(Tape&, Id)>> backs_;
};

}  // namespace mgcn::detail
