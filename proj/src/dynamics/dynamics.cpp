#include "mgcn/dynamics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "mgcn/errors.hpp"
#include "mgcn/isometry.hpp"
#include "mgcn/layers.hpp"

namespace mgcn {

Trajectory integrate(const Manifold& m, const Graph& g, const Mat& f, double T, double dt,
                     const IntegrateOptions& options) {
  if (!(dt > 0.0) || !(T >= 0.0) || !std::isfinite(T)) {
    throw ContractViolation("integrate: need dt > 0 and finite T >= 0");
  }
  if (options.record_every < 1) throw ContractViolation("integrate: record_every must be >= 1");
  const long long steps = std::llround(T / dt);
  Trajectory traj;
  traj.dt = dt;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(f);
  Mat cur = f;
  for (long long k = 1; k <= steps; ++k) {
    const double time = static_cast<double>(k) * dt;
    try {
      cur = step_map(m, g, cur, dt, 0.0);
    } catch (const CutLocusError& e) {
      std::ostringstream msg;
      msg << e.what() << " at time " << time - dt;
      throw CutLocusError(msg.str(), e.from(), e.to(), e.channel());
    }
    if (options.observer) options.observer(time, cur);
    if (k % options.record_every == 0 || k == steps) {
      traj.times.push_back(time);
      traj.snapshots.push_back(cur);
    }
  }
  return traj;
}

Trajectory integrate(const FeatureGraph& g, int channel, double T, double dt,
                     const IntegrateOptions& options) {
  return integrate(*make_manifold(g.kind()), g.graph(), g.channel(channel), T, dt, options);
}

double max_laplacian_norm(const Manifold& m, const Graph& g, const Mat& f) {
  const TangentField lap = laplacian(m, g, f);
  double worst = 0.0;
  for (Eigen::Index v = 0; v < f.cols(); ++v) {
    worst = std::max(worst, m.norm(f.col(v), lap.col(v)));
  }
  return worst;
}

bool is_stationary(const Manifold& m, const Graph& g, const Mat& f, double tol) {
  return max_laplacian_norm(m, g, f) < tol;
}

bool is_stationary(const FeatureGraph& g, int channel, double tol) {
  return is_stationary(*make_manifold(g.kind()), g.graph(), g.channel(channel), tol);
}

FeatureGraph make_tetrahedron() {
  Mat f(3, 4);
  f << 1, 1, -1, -1,
       1, -1, 1, -1,
       1, -1, -1, 1;
  f /= std::sqrt(3.0);
  std::vector<Edge> edges;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      if (a != b) edges.push_back({a, b, 1.0 / 3.0});
    }
  }
  return FeatureGraph(std::make_shared<Graph>(4, std::move(edges)), ManifoldKind::sphere(2), {f});
}

namespace {

FeatureGraph sphere_polygon(ManifoldKind kind, int n, Rng& rng) {
  Mat f = Mat::Zero(kind.ambient_dim(), n);
  std::vector<Edge> edges;
  for (int v = 0; v < n; ++v) {
    const double angle = 2.0 * std::numbers::pi * v / n;
    f(0, v) = std::cos(angle);
    f(1, v) = std::sin(angle);
    edges.push_back({v, (v + 1) % n, 0.5});
    edges.push_back({v, (v + n - 1) % n, 0.5});
  }
  const Isometry phi = Isometry::random(kind, rng);
  return FeatureGraph(std::make_shared<Graph>(n, std::move(edges)), kind, {phi.apply_columns(f)});
}

// Nodes 0 and 1 are anchors; every other node gets ring edges and one chord.
Graph anchored_graph(int n, Rng& rng) {
  std::uniform_real_distribution<double> weight(0.2, 1.0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<Edge> edges;
  for (int v = 2; v < n; ++v) {
    std::set<int> targets{(v + 1) % n, v - 1};
    const int chord = pick(rng);
    if (chord != v) targets.insert(chord);
    std::vector<double> w;
    for (std::size_t i = 0; i < targets.size(); ++i) w.push_back(weight(rng));
    double total = 0.0;
    for (double x : w) total += x;
    std::size_t i = 0;
    for (int u : targets) edges.push_back({v, u, w[i++] / total});
  }
  return Graph(n, std::move(edges));
}

}  // namespace

FeatureGraph make_wfm_stable_graph(ManifoldKind kind, int n, Rng& rng) {
  kind.validate();
  if (n < 3) throw ContractViolation("make_wfm_stable_graph: need n >= 3");
  if (kind.tag == ManifoldTag::Sphere) return sphere_polygon(kind, n, rng);

  const auto m = make_manifold(kind);
  auto graph = std::make_shared<Graph>(anchored_graph(n, rng));
  const Vec center = m->random_point(rng);
  Mat f(m->ambient_dim(), n);
  for (int v = 0; v < n; ++v) f.col(v) = m->exp(center, m->random_tangent(center, 1.0, rng));

  constexpr double kTarget = 1e-9;
  if (kind.tag == ManifoldTag::Euclidean) {
    // x_v - sum_u w(v,u) x_u = 0 for free nodes, x_v fixed for anchors
    Mat a = Mat::Identity(n, n);
    Mat rhs = Mat::Zero(n, m->ambient_dim());
    rhs.row(0) = f.col(0).transpose();
    rhs.row(1) = f.col(1).transpose();
    for (const Edge& e : graph->edges()) a(e.from, e.to) -= e.weight;
    f = a.partialPivLu().solve(rhs).transpose();
  } else {
    constexpr int kMaxSweeps = 20000;
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
      double worst = 0.0;
      for (int v = 2; v < n; ++v) {
        Vec step = m->zero_tangent();
        for (int idx : graph->out_edges(v)) {
          const Edge& e = graph->edges()[idx];
          step += e.weight * m->log(f.col(v), f.col(e.to));
        }
        worst = std::max(worst, m->norm(f.col(v), step));
        f.col(v) = m->exp(f.col(v), step);
      }
      if (worst < 0.1 * kTarget) break;
    }
    if (sweep == kMaxSweeps) throw NonConvergence("make_wfm_stable_graph: sweeps did not converge");
  }
  const double residual = max_laplacian_norm(*m, *graph, f);
  if (residual >= kTarget) {
    throw NonConvergence("make_wfm_stable_graph: residual " + std::to_string(residual));
  }
  return FeatureGraph(graph, kind, {f});
}

ContainmentReport check_containment(const Manifold& m, const Graph& g, const Mat& f,
                                    const std::vector<double>& t_grid, const Ball& ball,
                                    int steps) {
  if (steps < 1) throw ContractViolation("check_containment: steps must be >= 1");
  std::vector<double> grid = t_grid;
  std::sort(grid.begin(), grid.end());
  ContainmentReport report;
  report.ball = ball;
  bool prefix = true;
  for (double t : grid) {
    if (t < 0.0) throw ContractViolation("check_containment: negative t");
    ContainmentEntry entry{t, true, -ball.radius};
    Mat cur = f;
    try {
      for (int s = 0; s < steps; ++s) {
        cur = step_map(m, g, cur, t, 0.0);
        for (Eigen::Index v = 0; v < cur.cols(); ++v) {
          entry.max_excess = std::max(entry.max_excess, m.dist(ball.center, cur.col(v)) - ball.radius);
        }
      }
      entry.contained = entry.max_excess <= kContainmentTolerance;
    } catch (const CutLocusError&) {
      entry.contained = false;
      entry.max_excess = std::numeric_limits<double>::infinity();
    }
    prefix = prefix && entry.contained;
    if (prefix) report.max_contained_t = t;
    report.entries.push_back(entry);
  }
  return report;
}

ContainmentReport check_containment(const FeatureGraph& g, int channel,
                                    const std::vector<double>& t_grid, int steps) {
  const auto m = make_manifold(g.kind());
  const Mat& f = g.channel(channel);
  return check_containment(*m, g.graph(), f, t_grid, bounding_ball_estimate(*m, f), steps);
}

Contraction check_contraction(const Manifold& m, const Graph& g, const Mat& f, double t,
                              int steps) {
  return {graph_diameter(m, f), graph_diameter(m, l_step_map(m, g, f, t, 0.0, steps))};
}

Contraction check_contraction(const FeatureGraph& g, int channel, double t, int steps) {
  return check_contraction(*make_manifold(g.kind()), g.graph(), g.channel(channel), t, steps);
}

}  // namespace mgcn
