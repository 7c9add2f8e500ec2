#pragma once

#include <span>
#include <vector>

#include "mgcn/manifold.hpp"

namespace mgcn {

struct FrechetOptions {
  int max_iterations = 200;
  /// Iteration stops once |sum_i w_i log_mean(p_i)| drops below this.
  double tolerance = 1e-12;
  /// A stalled iteration is still accepted when the residual is below this.
  double acceptance = 1e-9;
  /// Keep the iterates and directions of accepted steps in the result.
  bool record_path = false;
};

struct FrechetResult {
  Vec mean;
  double residual = 0.0;
  int iterations = 0;
  /// Column of the starting point (largest weight, first on ties).
  int start_index = 0;
  /// Step lengths of the accepted updates mean <- exp_mean(step * sum_i w_i log_mean(p_i)).
  /// Replaying them from the starting point reproduces the mean exactly.
  std::vector<double> steps;
  /// With record_path: the mean before step k and sum_i w_i log_mean(p_i) there.
  std::vector<Vec> path;
  std::vector<Vec> directions;
};

/// Weighted Frechet mean of the columns of `points` by fixed-point iteration
/// mean <- exp_mean(sum_i w_i log_mean(p_i)). The step is halved whenever a
/// full step fails to reduce the optimality residual.
///
/// Throws NonConvergence if the residual is not below `acceptance` after
/// `max_iterations`, and CutLocusError if a logarithm is undefined.
FrechetResult frechet_mean(const Manifold& m, const Mat& points, const Vec& weights,
                           const FrechetOptions& options = {});

/// Validating wrapper: weights must be positive and sum to one; sphere inputs
/// must lie in an open hemisphere.
ManifoldPoint frechet_mean(std::span<const ManifoldPoint> points, std::span<const double> weights,
                           const FrechetOptions& options = {});

/// |sum_i w_i log_p(p_i)|_p
double frechet_residual(const Manifold& m, const Vec& p, const Mat& points, const Vec& weights);

}  // namespace mgcn
