#pragma once
// Continuous-time graph diffusion by explicit stepping, plus diagnostics for
// bounding-ball invariance, stationary configurations and contraction.
#include <functional>
#include <string>
#include <vector>

#include "mgcn/graph.hpp"

namespace mgcn {

struct Trajectory {
  std::vector<double> times;
  /// One feature matrix per entry of `times`.
  std::vector<Mat> snapshots;
  double dt = 0.0;
  std::string graph_id;
};

struct IntegrateOptions {
  /// Keep every k-th snapshot (the final state is always kept).
  int record_every = 1;
  /// Called after every step with (time, features); may be empty.
  std::function<void(double, const Mat&)> observer;
};

/// round(T / dt) explicit diffusion steps with t = dt and alpha = 0.
/// A CutLocusError raised mid-way reports the simulation time.
Trajectory integrate(const Manifold& m, const Graph& g, const Mat& f, double T, double dt,
                     const IntegrateOptions& options = {});
Trajectory integrate(const FeatureGraph& g, int channel, double T, double dt,
                     const IntegrateOptions& options = {});

/// max_v |Delta f(v)| < tol
bool is_stationary(const Manifold& m, const Graph& g, const Mat& f, double tol);
bool is_stationary(const FeatureGraph& g, int channel, double tol);
double max_laplacian_norm(const Manifold& m, const Graph& g, const Mat& f);

/// K4 on the 2-sphere at the vertices of a regular tetrahedron, weights 1/3.
FeatureGraph make_tetrahedron();

/// Non-constant graph in which every node with out-edges sits at the weighted
/// Frechet mean of its out-neighbours, hence stationary under diffusion.
///
/// Sphere: a regular n-gon on a great circle, each node linked to its two ring
/// neighbours with weight 1/2, moved by a random isometry.
/// Other kinds: two fixed anchor nodes without out-edges; the remaining nodes
/// have ring and chord edges with random weights summing to one and are placed
/// by Gauss-Seidel sweeps of the weighted mean (a linear solve for Euclidean).
/// Throws NonConvergence if the residual does not reach 1e-9.
FeatureGraph make_wfm_stable_graph(ManifoldKind kind, int n, Rng& rng);

struct ContainmentEntry {
  double t = 0.0;
  bool contained = false;
  /// max over nodes and steps of dist(center, f) - radius (<= 0 when contained)
  double max_excess = 0.0;
};

struct ContainmentReport {
  Ball ball;
  std::vector<ContainmentEntry> entries;
  /// Largest grid t such that every grid value up to it is contained; 0 if none.
  double max_contained_t = 0.0;
};

inline constexpr double kContainmentTolerance = 1e-8;

/// Runs `steps` step maps for each t of the grid and checks that every
/// intermediate output stays within `ball` (tolerance 1e-8). Nothing is
/// thrown for escaping features; an undefined logarithm counts as an escape.
ContainmentReport check_containment(const Manifold& m, const Graph& g, const Mat& f,
                                    const std::vector<double>& t_grid, const Ball& ball,
                                    int steps = 1);
/// Same with the Frechet-mean-centred bounding ball of the features.
ContainmentReport check_containment(const FeatureGraph& g, int channel,
                                    const std::vector<double>& t_grid, int steps = 1);

struct Contraction {
  double before = 0.0;
  double after = 0.0;
};

/// Graph diameter before and after the l-step map with alpha = 0.
Contraction check_contraction(const Manifold& m, const Graph& g, const Mat& f, double t,
                              int steps);
Contraction check_contraction(const FeatureGraph& g, int channel, double t, int steps);

}  // namespace mgcn
