#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mgcn/errors.hpp"
#include "mgcn/graph.hpp"
#include "mgcn/isometry.hpp"
#include "mgcn/layers.hpp"
#include "test_util.hpp"

using namespace mgcn;

namespace {

GraphPtr shared(Graph g) { return std::make_shared<Graph>(std::move(g)); }

Mat scalars(std::initializer_list<double> xs) {
  Mat m(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) m(0, i++) = x;
  return m;
}

Graph random_graph(int n, double p, Rng& rng) {
  std::bernoulli_distribution coin(p);
  std::uniform_real_distribution<double> weight(0.05, 0.4);
  std::vector<Edge> edges;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b && coin(rng)) edges.push_back({a, b, weight(rng)});
    }
  }
  return Graph(n, std::move(edges));
}

Mat clustered_points(const Manifold& m, int n, double spread, Rng& rng) {
  const Vec c = m.random_point(rng);
  Mat f(m.ambient_dim(), n);
  for (int v = 0; v < n; ++v) f.col(v) = m.exp(c, m.random_tangent(c, spread, rng));
  return f;
}

std::vector<int> random_perm(int n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace

TEST_CASE("graph construction rejects malformed input") {
  CHECK_THROWS_AS(Graph(2, {{0, 0, 1.0}}), ContractViolation);
  CHECK_THROWS_AS(Graph(2, {{0, 1, 1.0}, {0, 1, 2.0}}), ContractViolation);
  CHECK_THROWS_AS(Graph(2, {{0, 2, 1.0}}), ContractViolation);
  CHECK_THROWS_AS(Graph(2, {{0, 1, 0.0}}), ContractViolation);
  CHECK_THROWS_AS(Graph(2, {{0, 1, std::nan("")}}), ContractViolation);
  const Graph g = Graph::undirected(3, {{0, 1}, {1, 2}}, 0.5);
  CHECK(g.edge_count() == 4);
  CHECK(g.out_degree(1) == 2);
  CHECK(g.hop_distances(0) == std::vector<int>{0, 1, 2});
}

TEST_CASE("feature graph validates channels") {
  const GraphPtr g = shared(Graph(2, {{0, 1, 1.0}}));
  const ManifoldKind s2 = ManifoldKind::sphere(2);
  Mat ok(3, 2);
  ok << 0, 1, 0, 0, 1, 0;
  CHECK_NOTHROW(FeatureGraph(g, s2, {ok}));
  Mat bad = ok;
  bad(0, 0) = 0.5;
  CHECK_THROWS_AS(FeatureGraph(g, s2, {bad}), ContractViolation);
  CHECK_THROWS_AS(FeatureGraph(g, s2, {Mat::Zero(3, 3)}), ContractViolation);
}

TEST_CASE("admissibility report") {
  const ManifoldKind s2 = ManifoldKind::sphere(2);
  Mat f(3, 3);
  f << 0, 0, 1,  //
      0, 0, 0,   //
      1, -1, 0;
  const GraphPtr g = shared(Graph(3, {{0, 1, 1.0}, {0, 2, 1.0}, {2, 1, 1.0}}));
  const auto issues = validate_admissible(FeatureGraph(g, s2, {f}));
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].edge == 0);
  CHECK(issues[0].from == 0);
  CHECK(issues[0].to == 1);
  CHECK(validate_admissible(FeatureGraph(shared(Graph(3, {})), s2, {f})).empty());
  Rng rng(1);
  const auto h = make_manifold(ManifoldKind::lorentz(2));
  const FeatureGraph hg(shared(random_graph(6, 0.5, rng)), h->kind(), {clustered_points(*h, 6, 3.0, rng)});
  CHECK(validate_admissible(hg).empty());
  CHECK_THROWS_AS(laplacian(FeatureGraph(g, s2, {f}), 0), CutLocusError);
}

TEST_CASE("laplacian examples") {
  const auto e = make_manifold(ManifoldKind::euclidean(1));
  const Graph g(2, {{0, 1, 1.0}});
  const Mat lap = laplacian(*e, g, scalars({0.0, 2.0}));
  CHECK(lap(0, 0) == -2.0);
  CHECK(lap(0, 1) == 0.0);

  const auto s = make_manifold(ManifoldKind::sphere(2));
  Rng rng(3);
  const Vec p = s->random_point(rng);
  Mat constant(3, 4);
  constant << p, p, p, p;
  CHECK(laplacian(*s, random_graph(4, 0.7, rng), constant).norm() == 0.0);
}

TEST_CASE("flat laplacian matches the classical graph Laplacian") {
  Rng rng(8);
  const auto e = make_manifold(ManifoldKind::euclidean(3));
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = random_graph(7, 0.4, rng);
    const Mat f = Mat::Random(3, 7);
    std::vector<std::tuple<int, int, double>> edges;
    for (const Edge& ed : g.edges()) edges.emplace_back(ed.from, ed.to, ed.weight);
    CHECK((laplacian(*e, g, f) - testutil::flat_laplacian(7, edges, f)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("laplacian symmetries") {
  Rng rng(12);
  for (const auto& kind : testutil::all_kinds()) {
    INFO(kind.name());
    const auto m = make_manifold(kind);
    for (int trial = 0; trial < 10; ++trial) {
      const Graph g = random_graph(6, 0.5, rng);
      const Mat f = clustered_points(*m, 6, 0.5, rng);
      const Mat lap = laplacian(*m, g, f);

      const auto perm = random_perm(6, rng);
      CHECK(laplacian(*m, g.permuted(perm), permute_columns(f, perm)) == permute_columns(lap, perm));

      const Isometry phi = Isometry::random(kind, rng);
      CHECK((laplacian(*m, g, phi.apply_columns(f)) - phi.push_columns(lap)).cwiseAbs().maxCoeff() <
            1e-9);

      std::vector<Edge> reversed(g.edges().rbegin(), g.edges().rend());
      CHECK((laplacian(*m, Graph(6, reversed), f) - lap).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("weight normalization") {
  const Graph star(5, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}});
  const Graph n = normalize_weights(star);
  for (const Edge& e : n.edges()) CHECK(e.weight == 0.25);
  CHECK(normalize_weights(n).edges() == n.edges());
  const Graph small = Graph::undirected(3, {{0, 1}, {1, 2}}, 0.01);
  CHECK(normalize_weights(small).edges() == small.edges());
  Rng rng(2);
  const Graph g = random_graph(8, 0.8, rng);
  const Graph gn = normalize_weights(g);
  CHECK(gn.max_out_weight_sum() <= 1.0 + 1e-15);
  const double b = g.max_out_weight_sum();
  for (std::size_t k = 0; k < g.edge_count(); ++k) CHECK(gn.edges()[k].weight == g.edges()[k].weight / b);
}

TEST_CASE("diameter and bounding ball") {
  const auto e = make_manifold(ManifoldKind::euclidean(1));
  CHECK(graph_diameter(*e, scalars({0.0, 3.0})) == 3.0);
  const Ball ball = bounding_ball_estimate(*e, scalars({0.0, 3.0}));
  CHECK(ball.center(0) == doctest::Approx(1.5));
  CHECK(ball.radius == doctest::Approx(1.5));
  CHECK(bounding_ball_estimate(*e, scalars({4.0})).radius == 0.0);

  const auto s = make_manifold(ManifoldKind::sphere(2));
  Mat tet(3, 4);
  tet << 1, 1, -1, -1,  //
      1, -1, 1, -1,     //
      1, -1, -1, 1;
  tet /= std::sqrt(3.0);
  CHECK(graph_diameter(*s, tet) == doctest::Approx(std::acos(-1.0 / 3.0)).epsilon(1e-14));

  Rng rng(5);
  const Vec pole = Vec::Unit(3, 2);
  for (int trial = 0; trial < 20; ++trial) {
    // open upper hemisphere: the centre stays inside it and the ball covers every point
    Mat f(3, 6);
    for (int v = 0; v < 6; ++v) {
      Vec x = s->random_point(rng);
      x(2) = std::abs(x(2)) + 0.05;
      f.col(v) = x.normalized();
    }
    const Ball b = bounding_ball_estimate(*s, f);
    CHECK(b.center(2) > 0.0);
    for (int v = 0; v < 6; ++v) CHECK(s->dist(b.center, f.col(v)) <= b.radius);
    // cap of radius below pi/4 around the pole: radius below pi/2
    for (int v = 0; v < 6; ++v) f.col(v) = s->exp(pole, s->random_tangent(pole, 1.0, rng).normalized() * 0.78);
    CHECK(bounding_ball_estimate(*s, f).radius < std::numbers::pi / 2);
  }
}

TEST_CASE("activation threshold") {
  const auto s = make_manifold(ManifoldKind::sphere(2));
  Vec p(3), x(3);
  p << 0, 0, 1;
  x << 0.5, 0, 0;
  CHECK(activate(*s, p, x, 0.0) == x);
  CHECK(activate(*s, p, x, 1.0).norm() == 0.0);
  CHECK(activate(*s, p, x, 0.5) == x);
}

TEST_CASE("step maps") {
  const auto e = make_manifold(ManifoldKind::euclidean(1));
  const Graph g(2, {{0, 1, 1.0}});
  const Mat f = scalars({0.0, 2.0});
  CHECK(step_map(*e, g, f, 0.0, 0.0) == f);
  const Mat out = step_map(*e, g, f, 0.25, 0.0);
  CHECK(out(0, 0) == 0.5);
  CHECK(out(0, 1) == 2.0);
  CHECK(l_step_map(*e, g, f, 0.25, 0.0, 1) == out);
  CHECK_THROWS_AS(l_step_map(*e, g, f, 0.25, 0.0, 0), ContractViolation);

  // path v0 - v1 - v2: a change at v2 reaches v0 only after two steps
  const Graph path = Graph::undirected(3, {{0, 1}, {1, 2}}, 0.5);
  const Mat a = scalars({0.0, 1.0, 2.0});
  const Mat b = scalars({0.0, 1.0, 5.0});
  CHECK(l_step_map(*e, path, a, 0.5, 0.0, 1)(0, 0) == l_step_map(*e, path, b, 0.5, 0.0, 1)(0, 0));
  CHECK(l_step_map(*e, path, a, 0.5, 0.0, 2)(0, 0) != l_step_map(*e, path, b, 0.5, 0.0, 2)(0, 0));

  const auto s = make_manifold(ManifoldKind::sphere(2));
  Mat anti(3, 2);
  anti << 0, 0, 0, 0, 1, -1;
  try {
    l_step_map(*s, Graph(2, {{0, 1, 1.0}}), anti, 0.5, 0.0, 2, 0);
    FAIL("expected a cut-locus error");
  } catch (const CutLocusError& err) {
    CHECK(std::string(err.what()).find("step 1") != std::string::npos);
    CHECK(err.from() == 0);
    CHECK(err.to() == 1);
  }
}

TEST_CASE("locality of the l-step map") {
  Rng rng(19);
  const auto s = make_manifold(ManifoldKind::sphere(2));
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = random_graph(10, 0.15, rng);
    const Mat f = clustered_points(*s, 10, 0.4, rng);
    for (int ell = 1; ell <= 3; ++ell) {
      const auto hops = g.hop_distances(0);
      Mat f2 = f;
      for (int v = 0; v < 10; ++v) {
        if (hops[v] < 0 || hops[v] > ell) f2.col(v) = s->exp(f.col(v), s->random_tangent(f.col(v), 0.3, rng));
      }
      CHECK(l_step_map(*s, g, f, 0.7, 0.0, ell).col(0) == l_step_map(*s, g, f2, 0.7, 0.0, ell).col(0));
    }
  }
}

TEST_CASE("diffusion layer") {
  Rng rng(23);
  const auto s = make_manifold(ManifoldKind::sphere(2));
  const Graph g = random_graph(6, 0.5, rng);
  const Mat f1 = clustered_points(*s, 6, 0.4, rng);
  const Mat f2 = clustered_points(*s, 6, 0.4, rng);
  DiffusionParams zero{Vec::Zero(1), Vec::Zero(1), 1};
  CHECK(diffusion_layer(*s, g, {f1}, zero)[0] == f1);
  DiffusionParams two{Vec(2), Vec::Zero(2), 2};
  two.t << 0.3, 0.9;
  const Channels out = diffusion_layer(*s, g, {f1, f2}, two);
  CHECK(out[0] == l_step_map(*s, g, f1, 0.3, 0.0, 2));
  CHECK(out[1] == l_step_map(*s, g, f2, 0.9, 0.0, 2));
  DiffusionParams neg{Vec::Constant(1, -0.1), Vec::Zero(1), 1};
  CHECK_THROWS_AS(diffusion_layer(*s, g, {f1}, neg), ContractViolation);
}

TEST_CASE("tMLP examples") {
  Rng rng(29);
  const auto s = make_manifold(ManifoldKind::sphere(2));
  const Mat f = clustered_points(*s, 5, 0.4, rng);
  const TmlpOptions identity_sigma{TmlpMode::Signed, 1.0};
  const TmlpLayerParams one{Mat::Ones(1, 1), Mat::Ones(1, 1)};
  CHECK((tmlp_layer(*s, {f}, one, 0, identity_sigma)[0] - f).cwiseAbs().maxCoeff() < 1e-15);

  TmlpLayerParams random{Mat::Random(3, 2), Mat::Random(3, 2)};
  const Channels same = tmlp_layer(*s, {f, f}, random, 0);
  for (const Mat& c : same) CHECK(c == f);

  const Mat f2 = clustered_points(*s, 5, 0.4, rng);
  TmlpLayerParams id2{Mat::Identity(2, 2), Mat::Identity(2, 2)};
  const Channels ident = tmlp(*s, {f, f2}, {id2, id2}, 0, identity_sigma);
  CHECK((ident[1] - f2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tMLP degenerate direction falls back to X") {
  const auto e = make_manifold(ManifoldKind::euclidean(2));
  Mat f0 = Mat::Zero(2, 1), f1(2, 1);
  f1 << -1.0, 0.5;
  TmlpLayerParams p{Mat::Ones(1, 2), Mat::Zero(1, 2)};
  const Channels out = tmlp_layer(*e, {f0, f1}, p, 0);
  CHECK(out[0] == f1);
}

TEST_CASE("cancelled and uncancelled tMLP agree") {
  Rng rng(31);
  for (const auto& kind : testutil::all_kinds()) {
    INFO(kind.name());
    const auto m = make_manifold(kind);
    for (int trial = 0; trial < 10; ++trial) {
      Channels in;
      for (int c = 0; c < 3; ++c) in.push_back(clustered_points(*m, 4, 0.3, rng));
      std::vector<TmlpLayerParams> layers{{0.4 * Mat::Random(4, 3), Mat::Random(4, 3)},
                                          {0.4 * Mat::Random(2, 4), Mat::Random(2, 4)}};
      const Channels a = tmlp(*m, in, layers, 0, {}, true);
      const Channels b = tmlp(*m, in, layers, 0, {}, false);
      for (std::size_t j = 0; j < a.size(); ++j) CHECK((a[j] - b[j]).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("equivariance of diffusion and tMLP") {
  Rng rng(37);
  for (const auto& kind : testutil::all_kinds()) {
    INFO(kind.name());
    const auto m = make_manifold(kind);
    for (int trial = 0; trial < 10; ++trial) {
      const Graph g = normalize_weights(random_graph(6, 0.5, rng));
      Channels in;
      for (int c = 0; c < 2; ++c) in.push_back(clustered_points(*m, 6, 0.4, rng));
      DiffusionParams dp{Vec::Random(2).cwiseAbs(), Vec::Zero(2), 2};
      TmlpLayerParams tp{Mat::Random(3, 2), Mat::Random(3, 2)};

      const Isometry phi = Isometry::random(kind, rng);
      Channels moved;
      for (const Mat& f : in) moved.push_back(phi.apply_columns(f));
      const Channels d1 = diffusion_layer(*m, g, in, dp);
      const Channels d2 = diffusion_layer(*m, g, moved, dp);
      for (int c = 0; c < 2; ++c) CHECK((d2[c] - phi.apply_columns(d1[c])).cwiseAbs().maxCoeff() < 1e-9);
      const Channels t1 = tmlp_layer(*m, in, tp, 0);
      const Channels t2 = tmlp_layer(*m, moved, tp, 0);
      for (int c = 0; c < 3; ++c) CHECK((t2[c] - phi.apply_columns(t1[c])).cwiseAbs().maxCoeff() < 1e-9);

      const auto perm = random_perm(6, rng);
      Channels permuted;
      for (const Mat& f : in) permuted.push_back(permute_columns(f, perm));
      const Channels d3 = diffusion_layer(*m, g.permuted(perm), permuted, dp);
      for (int c = 0; c < 2; ++c) CHECK(d3[c] == permute_columns(d1[c], perm));
    }
  }
}

TEST_CASE("invariant layer, pooling, head and loss") {
  const auto e = make_manifold(ManifoldKind::euclidean(1));
  InvariantParams uniform{Mat::Zero(2, 2), Mat::Zero(2, 2)};
  const Mat s = invariant_layer(*e, {scalars({0.0}), scalars({4.0})}, uniform);
  CHECK(s(0, 0) == 0.0);
  CHECK(s(1, 0) == 0.0);
  const Mat pair = invariant_layer(*e, {scalars({0.0}), scalars({4.0})}, uniform, InvariantMode::Pair);
  CHECK(pair.rows() == 4);
  CHECK(pair(0, 0) == doctest::Approx(2.0));

  Rng rng(41);
  const auto h = make_manifold(ManifoldKind::lorentz(3));
  const Vec p = h->random_point(rng);
  Mat same(4, 3);
  same << p, p, p;
  InvariantParams rnd{Mat::Random(3, 3), Mat::Random(3, 3)};
  CHECK(invariant_layer(*h, {same, same, same}, rnd).cwiseAbs().maxCoeff() == 0.0);
  Channels in;
  for (int c = 0; c < 3; ++c) in.push_back(clustered_points(*h, 5, 0.5, rng));
  const Isometry phi = Isometry::random(h->kind(), rng);
  Channels moved;
  for (const Mat& f : in) moved.push_back(phi.apply_columns(f));
  CHECK((invariant_layer(*h, in, rnd) - invariant_layer(*h, moved, rnd)).cwiseAbs().maxCoeff() < 1e-9);

  Vec pooled = pool(scalars({1.0, 3.0}));
  CHECK(pooled(0) == 3.0);
  CHECK(pooled(1) == 2.0);
  CHECK_THROWS_AS(pool(Mat(1, 0)), ContractViolation);

  HeadParams zero{Mat::Zero(2, 3), Vec::Zero(2), Mat::Zero(3, 2), Vec::Zero(3)};
  const Vec lp = head(Vec::Ones(2), Vec::Ones(1), zero);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(lp(i) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-14));
  CHECK(cross_entropy(lp, 1) == doctest::Approx(std::log(3.0)));
  CHECK_THROWS_AS(head(Vec::Ones(4), Vec(), zero), ContractViolation);

  Vec logits(2);
  logits << 1.0, 0.0;
  const Vec ls = log_softmax(logits);
  CHECK(ls(0) == doctest::Approx(-0.3132616875).epsilon(1e-9));
  CHECK(ls(1) == doctest::Approx(-1.3132616875).epsilon(1e-9));
  CHECK(cross_entropy(ls, 0) == doctest::Approx(0.3132616875).epsilon(1e-9));
  CHECK((log_softmax(logits.array() + 7.5) - ls).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cross_entropy(Vec::Zero(1), 0) == 0.0);
  CHECK_THROWS_AS(cross_entropy(ls, 2), ContractViolation);
}
