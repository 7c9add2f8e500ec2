#include "mgcn/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mgcn/datagen.hpp"
#include "mgcn/dynamics.hpp"
#include "mgcn/errors.hpp"
#include "mgcn/frechet.hpp"
#include "mgcn/isometry.hpp"
#include "mgcn/layers.hpp"
#include "mgcn/model.hpp"
#include "mgcn/train.hpp"

namespace mgcn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class Suite {
 public:
  Suite(int criterion, const VerifyOptions& options) : options_(options) {
    result_.criterion = criterion;
    result_.suite = suite_names()[static_cast<std::size_t>(criterion - 1)];
  }

  void check(std::string name, double value, std::string relation, double limit,
             bool gating = true) {
    bool ok = false;
    if (relation == "<") ok = value < limit;
    else if (relation == "<=") ok = value <= limit;
    else if (relation == ">") ok = value > limit;
    else if (relation == ">=") ok = value >= limit;
    else if (relation == "==") ok = value == limit;
    result_.checks.push_back({std::move(name), value, std::move(relation), limit, gating, ok});
  }

  void info(std::string key, std::string value) {
    result_.info.emplace_back(std::move(key), std::move(value));
  }

  void log(const std::string& msg) const {
    if (options_.log) options_.log(result_.suite + ": " + msg);
  }

  /// Adds the runtime check (when `budget` > 0) and settles the verdict.
  SuiteResult finish(double budget = 0.0) {
    result_.seconds = seconds_since(start_);
    if (budget > 0.0) check("runtime_s", result_.seconds, "<", budget);
    result_.passed = result_.error.empty() &&
                     std::all_of(result_.checks.begin(), result_.checks.end(),
                                 [](const Check& c) { return !c.gating || c.passed; });
    return result_;
  }

  SuiteResult fail(const std::string& error) {
    result_.error = error;
    return finish();
  }

  Rng rng(std::uint64_t stream) const { return Rng(derive_seed(options_.seed, stream)); }
  const VerifyOptions& options() const { return options_; }

 private:
  const VerifyOptions& options_;
  SuiteResult result_;
  Clock::time_point start_ = Clock::now();
};

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<ManifoldKind> test_kinds() {
  return {ManifoldKind::euclidean(3), ManifoldKind::sphere(2), ManifoldKind::lorentz(4),
          ManifoldKind::spd(3)};
}

/// Ring plus random chords, random weights in both directions, normalised so
/// that every node's out-weights sum to at most one.
Graph random_graph(int n, Rng& rng, double chord_probability = 0.2) {
  std::vector<std::pair<int, int>> pairs;
  for (int v = 0; v < n; ++v) pairs.emplace_back(v, (v + 1) % n);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 2; b < n; ++b) {
      if (a == 0 && b == n - 1) continue;
      if (uniform(rng, 0.0, 1.0) < chord_probability) pairs.emplace_back(a, b);
    }
  }
  std::vector<Edge> edges;
  for (auto [a, b] : pairs) {
    edges.push_back({a, b, uniform(rng, 0.2, 1.0)});
    edges.push_back({b, a, uniform(rng, 0.2, 1.0)});
  }
  return normalize_weights(Graph(n, std::move(edges)));
}

/// n points exp_c(X) with X ~ random_tangent(c, spread) around a random c.
Mat cluster(const Manifold& m, const Vec& center, int n, double spread, Rng& rng) {
  Mat f(m.ambient_dim(), n);
  for (int v = 0; v < n; ++v) f.col(v) = m.exp(center, m.random_tangent(center, spread, rng));
  return f;
}

Mat random_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Mat a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = uniform(rng, -scale, scale);
  return a;
}

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

double max_column_dist(const Manifold& m, const Mat& a, const Mat& b) {
  double worst = 0.0;
  for (Eigen::Index v = 0; v < a.cols(); ++v) worst = std::max(worst, m.dist(a.col(v), b.col(v)));
  return worst;
}

double max_abs(const Mat& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

/// Random model with every parameter moved away from its initial value.
ModelParams random_model(const ModelDescriptor& d, Rng& rng, double noise) {
  ModelParams p = ModelParams::init(d, rng);
  std::normal_distribution<double> normal(0.0, noise);
  for (Eigen::Index i = 0; i < p.flat().size(); ++i) p.flat()(i) += normal(rng);
  for (const std::string name : {"t", "alpha"}) {
    for (int k = 0; k < d.blocks(); ++k) {
      const ParamSlice& s = p.slice("diffusion" + std::to_string(k) + "." + name);
      auto seg = p.flat().segment(s.offset, s.size());
      seg = seg.cwiseAbs();
      if (name == std::string("alpha")) seg *= 0.1;
    }
  }
  p.project();
  return p;
}

// ---------------------------------------------------------------------------
// 1. geometry

SuiteResult geometry(const VerifyOptions& options) {
  Suite s(1, options);
  for (const ManifoldKind& kind : test_kinds()) {
    const auto m = make_manifold(kind);
    Rng rng = s.rng(100 + static_cast<std::uint64_t>(kind.tag));
    double round_trip = 0, exp_dist = 0, log_exp = 0, symmetry = 0, log_norm = 0;
    double iso_dist = 0, iso_inner = 0, iso_exp = 0, iso_log = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const Vec p = m->random_point(rng);
      Vec x = m->random_tangent(p, 0.8, rng);
      if (kind.tag == ManifoldTag::Sphere) {
        while (m->norm(p, x) > 3.0) x = m->random_tangent(p, 0.8, rng);
      }
      const Vec y = m->random_tangent(p, 0.8, rng);
      Vec q = m->random_point(rng);
      if (kind.tag == ManifoldTag::Sphere) {
        while (m->dist(p, q) > std::numbers::pi - 1e-3) q = m->random_point(rng);
      }
      const double xn = m->norm(p, x);
      const Vec ex = m->exp(p, x);
      const auto rel = [](double err, double scale) { return err / std::max(1.0, scale); };
      round_trip = std::max(round_trip, rel((m->log(p, ex) - x).norm(), x.norm()));
      exp_dist = std::max(exp_dist, rel(std::abs(m->dist(p, ex) - xn), xn));
      log_exp = std::max(log_exp, rel((m->exp(p, m->log(p, q)) - q).norm(), q.norm()));
      const double d = m->dist(p, q);
      symmetry = std::max(symmetry, std::abs(d - m->dist(q, p)));
      log_norm = std::max(log_norm, rel(std::abs(m->norm(p, m->log(p, q)) - d), d));

      const Isometry phi = Isometry::random(kind, rng);
      const Vec fp = phi.apply(p);
      iso_dist = std::max(iso_dist, rel(std::abs(m->dist(fp, phi.apply(q)) - d), d));
      const double ip = m->inner(p, x, y);
      iso_inner = std::max(iso_inner, rel(std::abs(m->inner(fp, phi.push(x), phi.push(y)) - ip),
                                          std::abs(ip)));
      const Vec lhs = phi.apply(ex);
      iso_exp = std::max(iso_exp, rel((lhs - m->exp(fp, phi.push(x))).norm(), lhs.norm()));
      const Vec pl = phi.push(m->log(p, q));
      iso_log = std::max(iso_log, rel((pl - m->log(fp, phi.apply(q))).norm(), pl.norm()));
    }
    const std::string k = kind.name();
    s.check(k + ".log_exp_roundtrip", round_trip, "<", 1e-9);
    s.check(k + ".dist_exp_vs_norm", exp_dist, "<", 1e-9);
    s.check(k + ".exp_log_roundtrip", log_exp, "<", 1e-9);
    s.check(k + ".dist_symmetry", symmetry, "<", 1e-9);
    s.check(k + ".log_norm_vs_dist", log_norm, "<", 1e-9);
    s.check(k + ".isometry_dist", iso_dist, "<", 1e-9);
    s.check(k + ".isometry_inner", iso_inner, "<", 1e-9);
    s.check(k + ".isometry_exp", iso_exp, "<", 1e-9);
    s.check(k + ".isometry_log", iso_log, "<", 1e-9);
  }
  s.info("residuals", "relative to max(1, |reference|), 200 cases per manifold");
  return s.finish(10.0);
}

// ---------------------------------------------------------------------------
// 2. equivariance

SuiteResult equivariance(const VerifyOptions& options) {
  Suite s(2, options);
  for (const ManifoldKind& kind : test_kinds()) {
    const auto m = make_manifold(kind);
    Rng rng = s.rng(200 + static_cast<std::uint64_t>(kind.tag));
    double diff_iso = 0, tmlp_iso = 0, diff_perm = 0, tmlp_perm = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = uniform_int(rng, 4, 12);
      const Graph g = random_graph(n, rng);
      const int c = uniform_int(rng, 1, 4);
      const Vec center = m->random_point(rng);
      Channels in;
      for (int i = 0; i < c; ++i) in.push_back(cluster(*m, center, n, 0.4, rng));

      DiffusionParams dp;
      dp.t = Vec(c);
      dp.alpha = Vec(c);
      for (int i = 0; i < c; ++i) {
        dp.t(i) = uniform(rng, 0.0, 1.0);
        dp.alpha(i) = uniform(rng, 0.0, 0.2);
      }
      dp.steps = uniform_int(rng, 1, 3);

      TmlpLayerParams tp;
      const int c_out = uniform_int(rng, 1, 4);
      tp.omega = random_matrix(c_out, c, 0.7, rng);
      tp.xi = random_matrix(c_out, c, 0.7, rng);
      const TmlpOptions topts{trial % 2 == 0 ? TmlpMode::Signed : TmlpMode::Norm, 0.01};

      const Isometry phi = Isometry::random(kind, rng);
      const std::vector<int> perm = random_permutation(n, rng);
      const Graph gp = g.permuted(perm);

      Channels in_phi, in_perm;
      for (const Mat& f : in) {
        in_phi.push_back(phi.apply_columns(f));
        in_perm.push_back(permute_columns(f, perm));
      }

      const Channels out = diffusion_layer(*m, g, in, dp);
      const Channels out_phi = diffusion_layer(*m, g, in_phi, dp);
      const Channels out_perm = diffusion_layer(*m, gp, in_perm, dp);
      for (int i = 0; i < c; ++i) {
        diff_iso = std::max(diff_iso, max_column_dist(*m, phi.apply_columns(out[i]), out_phi[i]));
        diff_perm = std::max(diff_perm, max_abs(permute_columns(out[i], perm) - out_perm[i]));
      }

      const Channels t_out = tmlp_layer(*m, in, tp, 0, topts);
      const Channels t_phi = tmlp_layer(*m, in_phi, tp, 0, topts);
      const Channels t_perm = tmlp_layer(*m, in_perm, tp, 0, topts);
      for (int j = 0; j < c_out; ++j) {
        tmlp_iso = std::max(tmlp_iso, max_column_dist(*m, phi.apply_columns(t_out[j]), t_phi[j]));
        tmlp_perm = std::max(tmlp_perm, max_abs(permute_columns(t_out[j], perm) - t_perm[j]));
      }
    }
    const std::string k = kind.name();
    s.check(k + ".diffusion_isometry", diff_iso, "<", 1e-9);
    s.check(k + ".diffusion_permutation", diff_perm, "==", 0.0);
    s.check(k + ".tmlp_isometry", tmlp_iso, "<", 1e-9);
    s.check(k + ".tmlp_permutation", tmlp_perm, "==", 0.0);
  }
  s.info("residuals", "node-wise geodesic distance; permutation compared bitwise");
  return s.finish(120.0);
}

// ---------------------------------------------------------------------------
// 3. invariance

SuiteResult invariance(const VerifyOptions& options) {
  Suite s(3, options);
  const std::vector<ManifoldKind> kinds = {ManifoldKind::sphere(2), ManifoldKind::lorentz(3),
                                           ManifoldKind::spd(2), ManifoldKind::euclidean(3)};
  Rng rng = s.rng(300);
  double perm_res = 0, iso_res = 0;
  for (int model = 0; model < 50; ++model) {
    ModelDescriptor d;
    d.kind = kinds[static_cast<std::size_t>(model) % kinds.size()];
    d.widths = {uniform_int(rng, 1, 3), uniform_int(rng, 2, 4), uniform_int(rng, 2, 4)};
    d.steps = uniform_int(rng, 1, 2);
    d.tmlp_mode = model % 3 == 0 ? TmlpMode::Norm : TmlpMode::Signed;
    d.invariant_mode = model % 2 == 0 ? InvariantMode::Difference : InvariantMode::Pair;
    const ModelParams p = random_model(d, rng, 0.3);
    const auto m = make_manifold(d.kind);
    for (int graph = 0; graph < 10; ++graph) {
      const int n = uniform_int(rng, 5, 12);
      const auto g = std::make_shared<const Graph>(random_graph(n, rng));
      const Vec center = m->random_point(rng);
      const FeatureGraph fg(g, d.kind, {cluster(*m, center, n, 0.4, rng)});
      const Vec lp = forward(p, fg);

      const std::vector<int> perm = random_permutation(n, rng);
      const FeatureGraph fp = fg.with_graph(std::make_shared<const Graph>(g->permuted(perm)))
                                  .with_channels({permute_columns(fg.channel(0), perm)});
      perm_res = std::max(perm_res, max_abs(forward(p, fp) - lp));

      const Isometry phi = Isometry::random(d.kind, rng);
      const FeatureGraph fi = fg.with_channels({phi.apply_columns(fg.channel(0))});
      iso_res = std::max(iso_res, max_abs(forward(p, fi) - lp));
    }
  }
  s.check("log_probs_permutation", perm_res, "<", 1e-8);
  s.check("log_probs_isometry", iso_res, "<", 1e-8);

  // Relabelling nodes before the one-hot embedding permutes the Lorentz
  // coordinates, which is an isometry.
  double onehot = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 8;
    SyntheticSpec spec;
    spec.family = static_cast<GraphFamily>(trial % 3);
    spec.nodes = n;
    spec.seed = derive_seed(options.seed, 3000 + static_cast<std::uint64_t>(trial));
    const Graph g = normalize_weights(gen_synthetic(spec).graph);
    ModelDescriptor d;
    d.kind = ManifoldKind::lorentz(n);
    const ModelParams p = random_model(d, rng, 0.3);
    const std::vector<int> perm = random_permutation(n, rng);
    const Vec a = forward(p, embed_onehot_hyperbolic(std::make_shared<const Graph>(g)));
    const Vec b = forward(p, embed_onehot_hyperbolic(std::make_shared<const Graph>(g.permuted(perm))));
    onehot = std::max(onehot, max_abs(a - b));
  }
  s.check("onehot_order_independence", onehot, "<", 1e-8);
  s.info("cases", "50 models x 10 graphs over sphere(2), lorentz(3), spd(2), euclidean(3)");
  return s.finish(300.0);
}

// ---------------------------------------------------------------------------
// 4. euclidean reduction

SuiteResult euclidean(const VerifyOptions& options) {
  Suite s(4, options);
  Rng rng = s.rng(400);
  double lap = 0, step = 0, lstep = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = uniform_int(rng, 3, 30);
    const int dim = uniform_int(rng, 1, 5);
    const auto m = make_manifold(ManifoldKind::euclidean(dim));
    const Graph g = random_graph(n, rng, 0.3);
    const Mat f = random_matrix(dim, n, 2.0, rng);
    const double t = uniform(rng, 0.0, 1.0);
    const double alpha = uniform(rng, 0.0, 0.3);
    const int steps = uniform_int(rng, 2, 4);

    // Delta F = F D - F W^T with the weighted adjacency W and out-degrees D.
    Mat w = Mat::Zero(n, n);
    for (const Edge& e : g.edges()) w(e.from, e.to) = e.weight;
    auto flat_laplacian = [&](const Mat& x) -> Mat {
      return x * w.rowwise().sum().asDiagonal() - x * w.transpose();
    };
    auto flat_step = [&](const Mat& x) -> Mat {
      Mat dl = flat_laplacian(x);
      for (int v = 0; v < n; ++v) {
        if (dl.col(v).norm() < alpha) dl.col(v).setZero();
      }
      return x - t * dl;
    };

    lap = std::max(lap, max_abs(laplacian(*m, g, f) - flat_laplacian(f)));
    step = std::max(step, max_abs(step_map(*m, g, f, t, alpha) - flat_step(f)));
    Mat ref = f;
    for (int k = 0; k < steps; ++k) ref = flat_step(ref);
    lstep = std::max(lstep, max_abs(l_step_map(*m, g, f, t, alpha, steps) - ref));
  }
  s.check("laplacian", lap, "<", 1e-12);
  s.check("step_map", step, "<", 1e-12);
  s.check("l_step_map", lstep, "<", 1e-12);
  return s.finish();
}

// ---------------------------------------------------------------------------
// 5. containment and contraction on the sphere

SuiteResult containment(const VerifyOptions& options) {
  Suite s(5, options);
  const ManifoldKind kind = ManifoldKind::sphere(2);
  const auto m = make_manifold(kind);
  Rng rng = s.rng(500);
  std::vector<double> grid;
  for (int i = 1; i <= 60; ++i) grid.push_back(0.05 * i);

  double min_a = std::numeric_limits<double>::infinity();
  int spot_failures = 0, spot_checks = 0;
  int contraction_failures = 0, contraction_checks = 0;
  int overshoot_failures = 0, overshoot_checks = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  double max_final_diameter = 0.0, max_weight_sum = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = uniform_int(rng, 6, 14);
    const Graph g = random_graph(n, rng, 0.25);
    max_weight_sum = std::max(max_weight_sum, g.max_out_weight_sum());
    const int steps = 1 + trial % 3;

    // features in a cap of radius r < pi/2 around a random pole
    const Vec pole = m->random_point(rng);
    const double r = uniform(rng, 0.3, 1.4);
    Mat f(3, n);
    for (int v = 0; v < n; ++v) {
      Vec x = m->random_tangent(pole, 1.0, rng);
      x *= r * std::sqrt(uniform(rng, 0.0, 1.0)) / std::max(1e-12, x.norm());
      f.col(v) = m->exp(pole, x);
    }
    Ball ball{pole, 0.0};
    for (int v = 0; v < n; ++v) ball.radius = std::max(ball.radius, m->dist(pole, f.col(v)));

    const ContainmentReport rep = check_containment(*m, g, f, grid, ball, steps);
    const double a = rep.max_contained_t;
    min_a = std::min(min_a, a);
    for (int k = 0; k < 5 && a > 0.0; ++k) {
      const double t = uniform(rng, 0.0, a);
      ++spot_checks;
      if (!check_containment(*m, g, f, {t}, ball, steps).entries.front().contained) ++spot_failures;
    }
    // Contraction is gated for t < min(a, 1); larger steps can overshoot.
    for (double t : grid) {
      if (t >= a) break;
      const Contraction c = check_contraction(*m, g, f, t, steps);
      const bool shrinks = c.after < c.before;
      if (t < 1.0) {
        ++contraction_checks;
        if (!shrinks) ++contraction_failures;
      } else {
        ++overshoot_checks;
        if (!shrinks) ++overshoot_failures;
      }
    }

    IntegrateOptions io;
    io.record_every = 1000000;
    io.observer = [&](double, const Mat& x) {
      for (Eigen::Index v = 0; v < x.cols(); ++v) {
        worst_excess = std::max(worst_excess, m->dist(ball.center, x.col(v)) - ball.radius);
      }
    };
    const Trajectory traj = integrate(*m, g, f, 100.0, 1e-2, io);
    max_final_diameter = std::max(max_final_diameter, graph_diameter(*m, traj.snapshots.back()));
  }
  s.check("max_out_weight_sum", max_weight_sum, "<=", 1.0 + 1e-12);
  s.check("min_maximal_a", min_a, ">", 0.0);
  s.check("spot_check_escapes_below_a", spot_failures, "==", 0.0);
  s.check("contraction_failures_t_below_min_a_1", contraction_failures, "==", 0.0);
  s.check("contraction_failures_1_le_t_below_a", overshoot_failures, "==", 0.0, false);
  s.check("long_time_max_excess", worst_excess, "<=", kContainmentTolerance);
  s.check("final_diameter_t100", max_final_diameter, "<", 1e-3, false);
  s.info("grid", "t = 0.05 .. 3.0 step 0.05, l = 1..3");
  s.info("spot_checks", std::to_string(spot_checks));
  s.info("contraction_checks", std::to_string(contraction_checks) + " with t < 1, " +
                                    std::to_string(overshoot_checks) + " with 1 <= t < a");
  return s.finish(300.0);
}

// ---------------------------------------------------------------------------
// 6. stationary configurations

SuiteResult stationary(const VerifyOptions& options) {
  Suite s(6, options);
  const FeatureGraph tet = make_tetrahedron();
  const auto m = make_manifold(tet.kind());
  s.check("tetrahedron_max_laplacian", max_laplacian_norm(*m, tet.graph(), tet.channel(0)), "<",
          1e-12);
  const Trajectory traj = integrate(tet, 0, 10.0, 1e-2);
  s.check("tetrahedron_drift_T10", max_column_dist(*m, traj.snapshots.back(), tet.channel(0)), "<",
          1e-9);

  Rng rng = s.rng(600);
  int failures = 0, total = 0;
  double worst = 0.0;
  for (const ManifoldKind& kind : test_kinds()) {
    for (int i = 0; i < 5; ++i) {
      const FeatureGraph g = make_wfm_stable_graph(kind, uniform_int(rng, 5, 12), rng);
      const auto mk = make_manifold(kind);
      const double r = max_laplacian_norm(*mk, g.graph(), g.channel(0));
      worst = std::max(worst, r);
      ++total;
      if (!is_stationary(g, 0, 1e-8)) ++failures;
    }
  }
  s.check("wfm_graphs_not_stationary", failures, "==", 0.0);
  s.info("wfm_graphs", std::to_string(total) + " graphs, worst |Delta f| " + fmt(worst));
  return s.finish();
}

// ---------------------------------------------------------------------------
// 7. Frechet mean

SuiteResult frechet(const VerifyOptions& options) {
  Suite s(7, options);
  double residual = 0, iso = 0, flat = 0;
  for (const ManifoldKind& kind : test_kinds()) {
    const auto m = make_manifold(kind);
    Rng rng = s.rng(700 + static_cast<std::uint64_t>(kind.tag));
    for (int trial = 0; trial < 50; ++trial) {
      const int k = uniform_int(rng, 2, 8);
      const Mat pts = cluster(*m, m->random_point(rng), k, 0.5, rng);
      Vec w(k);
      for (int i = 0; i < k; ++i) w(i) = uniform(rng, 0.05, 1.0);
      w /= w.sum();
      const Vec mu = frechet_mean(*m, pts, w).mean;
      residual = std::max(residual, frechet_residual(*m, mu, pts, w));
      const Isometry phi = Isometry::random(kind, rng);
      iso = std::max(iso, m->dist(frechet_mean(*m, phi.apply_columns(pts), w).mean, phi.apply(mu)));
      if (kind.tag == ManifoldTag::Euclidean) flat = std::max(flat, (mu - pts * w).cwiseAbs().maxCoeff());
    }
  }
  s.check("optimality_residual", residual, "<", 1e-9);
  s.check("euclidean_weighted_average", flat, "<", 1e-12);
  s.check("isometry_equivariance", iso, "<", 1e-8);
  return s.finish();
}

// ---------------------------------------------------------------------------
// 8. meshes

SuiteResult mesh(const VerifyOptions& options) {
  Suite s(8, options);
  const TriangleMesh ico = make_icosphere(3);
  const MeshGraph mg = mesh_to_graph(ico);
  double normal_err = 0.0;
  for (Eigen::Index v = 0; v < ico.vertices.cols(); ++v) {
    const Vec radial = ico.vertices.col(v).normalized();
    normal_err = std::max(normal_err, (mg.graph.channel(0).col(v) - radial).norm());
  }
  s.check("icosphere3_normal_error", normal_err, "<", 1e-3);
  const double ball = 4.0 * std::numbers::pi / 3.0;
  s.check("icosphere3_volume_rel_error", std::abs(mg.volume - ball) / ball, "<", 0.02);
  s.check("cube_volume_error", std::abs(signed_volume(make_cube()) - 1.0), "<", 1e-12);
  for (NormalWeighting w : {NormalWeighting::Area, NormalWeighting::Uniform}) {
    const MeshGraph alt = mesh_to_graph(ico, w);
    double err = 0.0;
    for (Eigen::Index v = 0; v < ico.vertices.cols(); ++v) {
      err = std::max(err, (alt.graph.channel(0).col(v) - ico.vertices.col(v).normalized()).norm());
    }
    s.check(std::string("icosphere3_normal_error_") +
                (w == NormalWeighting::Area ? "area_weighted" : "uniform"),
            err, "<", 1e-3, false);
  }

  Rng rng = s.rng(800);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const TriangleMesh base = make_deformed_icosphere(2, trial % 2, rng);
    Mat q = linalg::random_orthogonal(3, rng);
    if (q.determinant() < 0) q.col(0) *= -1.0;
    TriangleMesh rotated = base;
    rotated.vertices = q * base.vertices;

    ModelDescriptor d;
    d.kind = ManifoldKind::sphere(2);
    d.classes = 2;
    d.covariates = 1;
    d.widths = {3, 4, 4};
    const ModelParams p = random_model(d, rng, 0.3);
    auto prepare = [](const TriangleMesh& mesh) { return normalize_weights(mesh_to_graph(mesh).graph); };
    worst = std::max(worst, max_abs(forward(p, prepare(base)) - forward(p, prepare(rotated))));
  }
  s.check("rotation_log_probs", worst, "<", 1e-9);
  return s.finish();
}

// ---------------------------------------------------------------------------
// 9. learning

SuiteResult learning(const VerifyOptions& options) {
  Suite s(9, options);
  const int seeds = options.learning_seeds;
  double f1_sum = 0.0;
  int decreasing = 0;
  for (int k = 0; k < seeds; ++k) {
    const std::uint64_t sd = derive_seed(options.seed, 900 + static_cast<std::uint64_t>(k));
    const Dataset data = make_synthetic_dataset(30, 30, SyntheticEmbedding::OneHotLorentz,
                                                derive_seed(sd, 1));
    const Split split = balanced_split(labels_of(data), {4, 1, 1}, derive_seed(sd, 2));
    ModelDescriptor d;
    d.kind = ManifoldKind::lorentz(30);
    d.widths = {5, 8, 8};
    d.hidden = 3;
    d.classes = 3;
    Rng init_rng(derive_seed(sd, 3));
    const ModelParams init = ModelParams::init(d, init_rng);
    TrainOptions opts;
    opts.epochs = options.learning_epochs;
    opts.batch_size = 3;
    opts.adam.lr = 1e-3;
    opts.seed = derive_seed(sd, 4);
    opts.on_epoch = [&](const EpochRecord& r) {
      if (r.epoch % 10 == 0) {
        s.log("seed " + std::to_string(k) + " epoch " + std::to_string(r.epoch) + " loss " +
              fmt(r.train_loss) + " val F1 " + fmt(r.validation_f1));
      }
    };
    const TrainResult res = train(init, data, split, opts);
    const Metrics test = evaluate(res.best, data, split.test);
    f1_sum += test.macro_f1;
    const std::size_t upto = std::min<std::size_t>(10, res.history.size() - 1);
    bool strict = upto == 10;
    for (std::size_t e = 1; e <= upto; ++e) {
      strict = strict && res.history[e].train_loss < res.history[e - 1].train_loss;
    }
    if (strict) ++decreasing;
    s.info("seed" + std::to_string(k),
           "test macro-F1 " + fmt(test.macro_f1) + ", best epoch " + std::to_string(res.best_epoch) +
               ", loss " + fmt(res.history.front().train_loss) + " -> " +
               fmt(res.history[upto].train_loss) + " over epochs 0.." + std::to_string(upto) +
               (strict ? " (strictly decreasing)" : " (not strictly decreasing)"));
  }
  s.check("mean_test_macro_f1", seeds > 0 ? f1_sum / seeds : 0.0, ">", 0.5);
  s.check("seeds_with_decreasing_loss", decreasing, ">=", std::ceil(0.8 * seeds));
  s.check("seeds", seeds, ">=", 5.0);
  s.check("epochs", options.learning_epochs, ">=", 60.0);
  s.info("protocol",
         "90 graphs (30 ER/BA/WS) of 30 nodes, one-hot Lorentz(30), widths 5-8-8, 4:1:1 split, "
         "batch 3, lr 1e-3, selection by last best validation macro-F1");
  return s.finish(1800.0);
}

// ---------------------------------------------------------------------------
// 10. parameter counting

SuiteResult params(const VerifyOptions& options) {
  Suite s(10, options);
  Rng rng = s.rng(1000);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ModelDescriptor d;
    const int blocks = uniform_int(rng, 1, 3);
    d.widths.clear();
    for (int k = 0; k <= blocks; ++k) d.widths.push_back(uniform_int(rng, 1, 9));
    d.hidden = uniform_int(rng, 1, 6);
    d.covariates = uniform_int(rng, 0, 2);
    d.invariant_mode = trial % 2 == 0 ? InvariantMode::Difference : InvariantMode::Pair;
    const ParamCount pc = count_params(d);
    long long sum = 0;
    for (const auto& [name, count] : pc.breakdown) {
      sum += count;
      for (int k = 0; k < blocks; ++k) {
        const long long ci = d.widths[k], co = d.widths[k + 1];
        if (name == "diffusion" + std::to_string(k) && count != 2 * ci) ++mismatches;
        if (name == "tmlp" + std::to_string(k) && count != 2 * ci * co) ++mismatches;
      }
    }
    const long long c = d.widths.back();
    const long long pooled = 2 * (d.invariant_mode == InvariantMode::Pair ? 2 * c : c);
    const long long expected_rest = 2 * c * c + d.hidden * (pooled + d.covariates) + d.hidden +
                                    d.classes * d.hidden + d.classes;
    long long layers = 0;
    for (int k = 0; k < blocks; ++k) layers += 2 * d.widths[k] + 2 * d.widths[k] * d.widths[k + 1];
    if (sum != pc.total || pc.total != layers + expected_rest) ++mismatches;
  }
  s.check("formula_mismatches", mismatches, "==", 0.0);

  ModelDescriptor small;
  small.widths = {5, 8};
  const ParamCount sc = count_params(small);
  s.check("diffusion_c5", static_cast<double>(sc.breakdown[0].second), "==", 10.0);
  s.check("tmlp_5_to_8", static_cast<double>(sc.breakdown[1].second), "==", 80.0);

  ModelDescriptor full;
  full.kind = ManifoldKind::lorentz(100);
  full.widths = {5, 8, 8};
  full.hidden = 3;
  const ParamCount pc = count_params(full);
  std::string breakdown;
  for (const auto& [name, count] : pc.breakdown) {
    if (!breakdown.empty()) breakdown += ", ";
    breakdown += name + " " + std::to_string(count);
  }
  s.info("architecture_breakdown", breakdown);
  s.check("architecture_total_vs_429", static_cast<double>(pc.total), "==", 429.0, false);
  std::string sweep;
  bool exact = false;
  for (int h = 1; h <= 8; ++h) {
    for (InvariantMode mode : {InvariantMode::Difference, InvariantMode::Pair}) {
      ModelDescriptor d = full;
      d.hidden = h;
      d.invariant_mode = mode;
      const long long total = count_params(d).total;
      exact = exact || total == 429;
      if (!sweep.empty()) sweep += ", ";
      sweep += "h=" + std::to_string(h) + (mode == InvariantMode::Pair ? "/pair" : "") + ":" +
               std::to_string(total);
    }
  }
  s.info("hidden_width_sweep", sweep);
  s.info("hidden_width_match",
         exact ? "some hidden width reproduces 429"
               : "no hidden width reproduces 429; the head width and the pooled width are not "
                 "stated, h = 3 gives the closest total");
  return s.finish();
}

// ---------------------------------------------------------------------------
// 11. gradients

SuiteResult gradients(const VerifyOptions& options) {
  Suite s(11, options);
  Rng rng = s.rng(1100);
  const std::vector<ManifoldKind> kinds = {ManifoldKind::sphere(2), ManifoldKind::lorentz(3),
                                           ManifoldKind::spd(2), ManifoldKind::euclidean(2)};
  double worst_ratio = 0.0;
  int richardson_ok = 0;
  std::string medians;
  for (int model = 0; model < 10; ++model) {
    ModelDescriptor d;
    d.widths = {2, 3, 3};
    const bool degree = model == 9;
    d.kind = degree ? ManifoldKind::lorentz(3) : kinds[static_cast<std::size_t>(model) % kinds.size()];
    const auto m = make_manifold(d.kind);
    const int n = 6;
    const auto g = std::make_shared<const Graph>(random_graph(n, rng, 0.3));
    FeatureGraph fg;
    if (degree) {
      d.degree_inputs = n;
      fg = FeatureGraph(g, d.kind, {cluster(*m, m->origin(), n, 0.3, rng)});
    } else {
      fg = FeatureGraph(g, d.kind, {cluster(*m, m->random_point(rng), n, 0.4, rng)});
    }
    fg = fg.with_label(model % d.classes);
    const ModelParams p = random_model(d, rng, 0.3);
    auto loss = [&](const Vec& x) { return sample_loss(ModelParams(d, x), fg); };

    const Vec rev = loss_gradient(p, fg).grad;
    const Vec fd = fd_gradient(loss, p.flat(), 1e-6);
    for (Eigen::Index i = 0; i < rev.size(); ++i) {
      const double tol = std::max(1e-4, 1e-3 * std::abs(fd(i)));
      worst_ratio = std::max(worst_ratio, std::abs(rev(i) - fd(i)) / tol);
    }

    // central differences at h, h/2, h/4: successive differences shrink by 4
    const double h = 1e-2;
    const Vec g1 = fd_gradient(loss, p.flat(), h);
    const Vec g2 = fd_gradient(loss, p.flat(), h / 2);
    const Vec g4 = fd_gradient(loss, p.flat(), h / 4);
    std::vector<double> ratios;
    for (Eigen::Index i = 0; i < g1.size(); ++i) {
      const double e1 = std::abs(g1(i) - g2(i));
      const double e2 = std::abs(g2(i) - g4(i));
      if (e2 > 1e-9) ratios.push_back(e1 / e2);
    }
    double median = std::numeric_limits<double>::quiet_NaN();
    if (!ratios.empty()) {
      std::nth_element(ratios.begin(), ratios.begin() + static_cast<long>(ratios.size() / 2),
                       ratios.end());
      median = ratios[ratios.size() / 2];
    }
    if (median > 3.0 && median < 5.0) ++richardson_ok;
    if (!medians.empty()) medians += ", ";
    medians += d.kind.name() + (degree ? "/degree" : "") + ":" + fmt(median);
  }
  s.check("max_error_over_tolerance", worst_ratio, "<=", 1.0);
  s.check("models_with_second_order_ratio", richardson_ok, "==", 10.0);
  s.info("tolerance", "|reverse - central(h=1e-6)| <= max(1e-4, 1e-3 |g|) per coordinate");
  s.info("richardson_median_ratios", medians);
  return s.finish();
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "geometry",   "equivariance", "invariance", "euclidean", "containment", "stationary",
      "frechet",    "mesh",         "learning",   "params",    "gradient"};
  return names;
}

int suite_criterion(std::string_view name) {
  const auto& names = suite_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i) + 1;
  }
  throw ContractViolation("unknown verification suite '" + std::string(name) + "'");
}

SuiteResult run_suite(int criterion, const VerifyOptions& options) {
  using Fn = SuiteResult (*)(const VerifyOptions&);
  static const Fn suites[] = {geometry, equivariance, invariance, euclidean, containment, stationary,
                              frechet,  mesh,         learning,   params,    gradients};
  if (criterion < 1 || criterion > 11) {
    throw ContractViolation("criterion must be between 1 and 11");
  }
  try {
    return suites[criterion - 1](options);
  } catch (const Error& e) {
    Suite s(criterion, options);
    return s.fail(e.what());
  }
}

SuiteResult run_suite(std::string_view name, const VerifyOptions& options) {
  return run_suite(suite_criterion(name), options);
}

std::string report_json(const std::vector<SuiteResult>& results, std::uint64_t seed) {
  using json = nlohmann::ordered_json;
  json out;
  out["seed"] = seed;
  bool all = true;
  json suites = json::array();
  for (const SuiteResult& r : results) {
    all = all && r.passed;
    json j;
    j["criterion"] = r.criterion;
    j["suite"] = r.suite;
    j["passed"] = r.passed;
    j["seconds"] = r.seconds;
    json checks = json::array();
    for (const Check& c : r.checks) {
      json cj;
      cj["name"] = c.name;
      cj["value"] = c.value;
      cj["relation"] = c.relation;
      cj["limit"] = c.limit;
      cj["gating"] = c.gating;
      cj["passed"] = c.passed;
      checks.push_back(cj);
    }
    j["checks"] = checks;
    json info = json::object();
    for (const auto& [k, v] : r.info) info[k] = v;
    j["info"] = info;
    if (!r.error.empty()) j["error"] = r.error;
    suites.push_back(j);
  }
  out["passed"] = all;
  out["suites"] = suites;
  return out.dump(2) + "\n";
}

std::string summary_line(const SuiteResult& r) {
  std::ostringstream out;
  out << (r.passed ? "[PASS] " : "[FAIL] ") << r.criterion << " " << r.suite << " (" << fmt(r.seconds)
      << " s)";
  for (const Check& c : r.checks) {
    if (!c.passed) {
      out << "\n    " << (c.gating ? "failed: " : "note: ") << c.name << " = " << fmt(c.value)
          << " (want " << c.relation << " " << fmt(c.limit) << ")";
    }
  }
  if (!r.error.empty()) out << "\n    error: " << r.error;
  return out.str();
}

}  // namespace mgcn
