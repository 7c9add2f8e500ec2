#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mgcn/datagen.hpp"
#include "mgcn/dynamics.hpp"
#include "mgcn/errors.hpp"
#include "mgcn/isometry.hpp"
#include "mgcn/layers.hpp"
#include "test_util.hpp"

using namespace mgcn;

namespace {

// Connected undirected graph: a ring plus random chords, random weights
// normalised so the largest out-weight sum is one.
Graph random_connected(int n, Rng& rng) {
  std::vector<Edge> edges;
  std::uniform_real_distribution<double> w(0.2, 1.0);
  std::bernoulli_distribution chord(0.3);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (b == a + 1 || (a == 0 && b == n - 1) || chord(rng)) {
        const double x = w(rng);
        edges.push_back({a, b, x});
        edges.push_back({b, a, x});
      }
    }
  }
  return normalize_weights(Graph(n, std::move(edges)));
}

// Points in the cap of angular radius `cap` around `pole`.
Mat cap_points(const Manifold& m, const Vec& pole, int n, double cap, Rng& rng) {
  std::uniform_real_distribution<double> r(0.0, cap);
  Mat f(m.ambient_dim(), n);
  for (int v = 0; v < n; ++v) {
    Vec x = m.random_tangent(pole, 1.0, rng);
    f.col(v) = m.exp(pole, r(rng) * x / m.norm(pole, x));
  }
  return f;
}

}  // namespace

TEST_CASE("integrate: stationary, empty and two-node cases") {
  const auto e1 = make_manifold(ManifoldKind::euclidean(1));
  const Graph g(2, {{0, 1, 0.5}, {1, 0, 0.5}});
  Mat f(1, 2);
  f << 0.0, 2.0;
  const Trajectory zero = integrate(*e1, g, f, 0.0, 0.1);
  REQUIRE(zero.times.size() == 1);
  CHECK(zero.snapshots[0] == f);

  const double dt = 0.01;
  const Trajectory traj = integrate(*e1, g, f, 1.0, dt);
  REQUIRE(traj.times.size() == 101);
  for (std::size_t k = 0; k < traj.times.size(); k += 10) {
    const Mat& s = traj.snapshots[k];
    CHECK(s(0, 1) - s(0, 0) == doctest::Approx(2.0 * std::pow(1.0 - dt, double(k))).epsilon(1e-12));
    CHECK(s(0, 0) + s(0, 1) == doctest::Approx(2.0));
  }
  // first-order agreement with the ODE solution 2 e^{-t}
  CHECK(std::abs(traj.snapshots.back()(0, 1) - traj.snapshots.back()(0, 0) - 2.0 * std::exp(-1.0)) <
        dt);

  Mat c = Mat::Constant(1, 2, 0.3);
  const Trajectory flat = integrate(*e1, g, c, 1.0, 0.1);
  for (const Mat& s : flat.snapshots) CHECK(s == c);

  IntegrateOptions opt;
  opt.record_every = 25;
  int calls = 0;
  opt.observer = [&](double, const Mat&) { ++calls; };
  const Trajectory sparse = integrate(*e1, g, f, 1.0, dt, opt);
  CHECK(calls == 100);
  CHECK(sparse.times.size() == 5);
  CHECK_THROWS_AS(integrate(*e1, g, f, 1.0, 0.0), ContractViolation);
}

TEST_CASE("integrate reports the time of a cut-locus event") {
  const auto s2 = make_manifold(ManifoldKind::sphere(2));
  const Graph g(2, {{0, 1, 1.0}});
  Mat f(3, 2);
  f.col(0) = Vec::Unit(3, 2);
  f.col(1) = -Vec::Unit(3, 2);
  try {
    integrate(*s2, g, f, 1.0, 0.1);
    FAIL("expected a cut-locus error");
  } catch (const CutLocusError& e) {
    CHECK(std::string(e.what()).find("time 0") != std::string::npos);
    CHECK(e.from() == 0);
    CHECK(e.to() == 1);
  }
}

TEST_CASE("tetrahedron graph is stationary") {
  const FeatureGraph tet = make_tetrahedron();
  const auto m = make_manifold(tet.kind());
  CHECK(max_laplacian_norm(*m, tet.graph(), tet.channel(0)) < 1e-12);
  CHECK(is_stationary(tet, 0, 1e-12));
  const double expected = std::acos(-1.0 / 3.0);
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      CHECK(m->dist(tet.channel(0).col(a), tet.channel(0).col(b)) ==
            doctest::Approx(expected).epsilon(1e-14));
    }
  }
  CHECK(graph_diameter(tet, 0) == doctest::Approx(expected).epsilon(1e-14));
  const Trajectory traj = integrate(tet, 0, 10.0, 0.01);
  CHECK((traj.snapshots.back() - tet.channel(0)).cwiseAbs().maxCoeff() < 1e-9);

  Mat bumped = tet.channel(0);
  bumped.col(0) = m->exp(bumped.col(0), m->project_tangent(bumped.col(0), Vec::Unit(3, 0) * 0.01));
  CHECK_FALSE(is_stationary(*m, tet.graph(), bumped, 1e-6));

  Rng rng(5);
  const Isometry phi = Isometry::random(tet.kind(), rng);
  CHECK(is_stationary(*m, tet.graph(), phi.apply_columns(tet.channel(0)), 1e-12));
}

TEST_CASE("weighted-Frechet-mean graphs are stationary and non-constant") {
  Rng rng(6);
  for (const auto& kind : testutil::all_kinds()) {
    INFO(kind.name());
    for (int n : {3, 5, 9}) {
      const FeatureGraph g = make_wfm_stable_graph(kind, n, rng);
      CHECK(is_stationary(g, 0, 1e-8));
      CHECK(graph_diameter(g, 0) > 1e-3);
      const Trajectory traj = integrate(g, 0, 1.0, 0.1);
      CHECK((traj.snapshots.back() - g.channel(0)).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
  CHECK_THROWS_AS(make_wfm_stable_graph(ManifoldKind::sphere(2), 2, rng), ContractViolation);
}

TEST_CASE("containment and contraction on hemisphere graphs") {
  Rng rng(8);
  const auto s2 = make_manifold(ManifoldKind::sphere(2));
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = random_connected(8, rng);
    const Vec pole = s2->random_point(rng);
    const Mat f = cap_points(*s2, pole, 8, 1.4, rng);
    Ball ball{pole, 0.0};
    for (int v = 0; v < 8; ++v) ball.radius = std::max(ball.radius, s2->dist(pole, f.col(v)));
    const ContainmentReport rep = check_containment(*s2, g, f, {0.0, 0.25, 0.5, 0.75, 1.0}, ball, 3);
    CHECK(rep.max_contained_t == 1.0);
    const Contraction c = check_contraction(*s2, g, f, 0.5, 3);
    CHECK(c.after < c.before);
  }
  const FeatureGraph constant(std::make_shared<Graph>(random_connected(5, rng)),
                              ManifoldKind::sphere(2), {Vec::Unit(3, 0).replicate(1, 5)});
  const ContainmentReport rep = check_containment(constant, 0, {0.5, 100.0});
  CHECK(rep.max_contained_t == 100.0);
  const Contraction c = check_contraction(constant, 0, 0.5, 2);
  CHECK(c.before == 0.0);
  CHECK(c.after == 0.0);
}

TEST_CASE("containment sweep reports escapes instead of throwing") {
  const auto e1 = make_manifold(ManifoldKind::euclidean(1));
  const Graph g(2, {{0, 1, 1.0}, {1, 0, 1.0}});
  Mat f(1, 2);
  f << 0.0, 1.0;
  const ContainmentReport rep = check_containment(*e1, g, f, {100.0, 0.5, 1.0, 3.0},
                                                  Ball{Vec::Constant(1, 0.5), 0.5});
  REQUIRE(rep.entries.size() == 4);
  CHECK(rep.entries[0].t == 0.5);
  CHECK(rep.max_contained_t == 1.0);
  CHECK_FALSE(rep.entries[3].contained);
  CHECK(rep.entries[3].max_excess > 0.0);
}

TEST_CASE("Euclidean path graph contracts and t = 0 keeps the diameter") {
  const auto e1 = make_manifold(ManifoldKind::euclidean(1));
  const Graph g = normalize_weights(Graph::undirected(4, {{0, 1}, {1, 2}, {2, 3}}, 1.0));
  Mat f(1, 4);
  f << 0.0, 1.0, 3.0, 6.0;
  // independent linear iteration x <- x + t W (x_u - x_v)
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(4, 4);
  for (const Edge& e : g.edges()) {
    lap(e.from, e.to) += e.weight;
    lap(e.from, e.from) -= e.weight;
  }
  Eigen::VectorXd x = f.row(0).transpose();
  for (int k = 0; k < 3; ++k) x += 0.5 * lap * x;
  const Contraction c = check_contraction(*e1, g, f, 0.5, 3);
  CHECK(c.before == 6.0);
  CHECK(c.after == doctest::Approx(x.maxCoeff() - x.minCoeff()).epsilon(1e-14));
  CHECK(c.after < c.before);
  const Contraction still = check_contraction(*e1, g, f, 0.0, 3);
  CHECK(still.after == still.before);
}

TEST_CASE("synthetic generators") {
  SyntheticSpec spec;
  spec.nodes = 100;
  spec.seed = 3;
  for (auto fam : {GraphFamily::ErdosRenyi, GraphFamily::BarabasiAlbert, GraphFamily::WattsStrogatz}) {
    INFO(family_name(fam));
    spec.family = fam;
    const SyntheticGraph a = gen_synthetic(spec);
    const SyntheticGraph b = gen_synthetic(spec);
    CHECK(a.graph.edges() == b.graph.edges());
    CHECK(a.graph.edge_count() % 2 == 0);
    for (const Edge& e : a.graph.edges()) CHECK(e.weight == 1.0 / 100.0);
    CHECK(normalize_weights(a.graph).edges() == a.graph.edges());
    CHECK(parse_family(family_name(fam)) == fam);
  }
  spec.nodes = 12;
  spec.family = GraphFamily::ErdosRenyi;
  spec.edge_probability = 1.0;
  CHECK(gen_synthetic(spec).graph.edge_count() == 12 * 11);
  spec.family = GraphFamily::BarabasiAlbert;
  spec.attachment = 1;
  const Graph tree = gen_synthetic(spec).graph;
  CHECK(tree.edge_count() == 2 * 11);
  // a tree is connected
  for (int d : tree.hop_distances(0)) CHECK(d >= 0);
  spec.attachment = 40;
  const SyntheticGraph star = gen_synthetic(spec);
  CHECK(star.clamped);
  CHECK(star.attachment == 11);
  spec.family = GraphFamily::WattsStrogatz;
  spec.ring_neighbors = 4;
  spec.rewiring = 0.0;
  const Graph ring = gen_synthetic(spec).graph;
  CHECK(ring.edge_count() == 2 * 24);
  for (int v = 0; v < 12; ++v) CHECK(ring.out_degree(v) == 4);
  spec.rewiring = 1.0;
  CHECK(gen_synthetic(spec).graph.edge_count() == 2 * 24);
  spec.nodes = 2;
  CHECK_THROWS_AS(gen_synthetic(spec), ContractViolation);
  CHECK_THROWS_AS(parse_family("tree"), ContractViolation);
}

TEST_CASE("hyperbolic and SPD one-hot embeddings") {
  auto g2 = std::make_shared<const Graph>(Graph::undirected(2, {{0, 1}}, 0.5));
  const FeatureGraph h = embed_onehot_hyperbolic(g2, 1);
  const auto m = make_manifold(h.kind());
  CHECK(h.kind() == ManifoldKind::lorentz(2));
  // together with the origin, the two features are three mutually equidistant points
  const Vec o = m->origin();
  const double a = m->dist(h.channel(0).col(0), h.channel(0).col(1));
  const double b = m->dist(o, h.channel(0).col(0));
  const double c = m->dist(o, h.channel(0).col(1));
  CHECK(b == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::acosh(-linalg::minkowski(h.channel(0).col(0), o)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a > 0.0);

  auto g5 = std::make_shared<const Graph>(Graph::undirected(5, {{0, 1}, {1, 2}, {3, 4}}, 0.2));
  const FeatureGraph h5 = embed_onehot_hyperbolic(g5);
  const auto m5 = make_manifold(h5.kind());
  const double d01 = m5->dist(h5.channel(0).col(0), h5.channel(0).col(1));
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      CHECK(m5->dist(h5.channel(0).col(i), h5.channel(0).col(j)) == doctest::Approx(d01).epsilon(1e-12));
    }
  }

  CHECK(onehot_spd_size(100) == 15);
  CHECK(onehot_spd_size(3) == 3);
  const FeatureGraph s = embed_onehot_spd(g5, 4);
  CHECK(s.kind() == ManifoldKind::spd(4));
  for (int v = 0; v < 5; ++v) {
    const auto e = linalg::sym_eig(linalg::as_matrix(s.channel(0).col(v), 4));
    Vec sorted = e.values;
    std::sort(sorted.data(), sorted.data() + 4);
    CHECK(sorted(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(sorted(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sorted(2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sorted(3) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(embed_onehot_spd(g5, 3), ContractViolation);

  Mat amap = Mat::Random(3, 5);
  const FeatureGraph dg = embed_degree_hyperbolic(g5, amap);
  const auto m3 = make_manifold(dg.kind());
  // nodes 0 and 2 both have degree 1
  CHECK(dg.channel(0).col(0) == dg.channel(0).col(2));
  for (int v = 0; v < 5; ++v) CHECK(m3->point_residual(dg.channel(0).col(v)) < 1e-12);
  CHECK_THROWS_AS(embed_degree_hyperbolic(g5, Mat::Random(3, 4)), ContractViolation);
}

TEST_CASE("icosphere, cube and OBJ round trip") {
  const TriangleMesh ico0 = make_icosphere(0);
  CHECK(ico0.vertices.cols() == 12);
  CHECK(ico0.faces.size() == 20);
  const TriangleMesh ico1 = make_icosphere(1);
  CHECK(ico1.vertices.cols() == 42);
  CHECK(ico1.faces.size() == 80);
  const TriangleMesh ico3 = make_icosphere(3);
  for (Eigen::Index i = 0; i < ico3.vertices.cols(); ++i) {
    CHECK(std::abs(ico3.vertices.col(i).norm() - 1.0) < 1e-12);
  }
  CHECK(non_manifold_edges(ico3).empty());

  const MeshGraph mg = mesh_to_graph(ico3);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ico3.vertices.cols(); ++i) {
    worst = std::max(worst, (mg.graph.channel(0).col(i) - ico3.vertices.col(i)).norm());
  }
  CHECK(worst < 1e-3);
  const double sphere_vol = 4.0 * std::numbers::pi / 3.0;
  CHECK(std::abs(mg.volume - sphere_vol) / sphere_vol < 0.02);
  CHECK(mg.graph.covariates()(0) == mg.volume);
  CHECK(mg.clamped_weights == 0);
  // area and uniform averaging approach the radial direction at first order
  auto radial_error = [](const TriangleMesh& mesh, NormalWeighting w) {
    const Mat n = mesh_to_graph(mesh, w).graph.channel(0);
    return (n - mesh.vertices).colwise().norm().maxCoeff();
  };
  for (auto w : {NormalWeighting::Area, NormalWeighting::Uniform}) {
    const double coarse = radial_error(make_icosphere(2), w);
    const double fine = radial_error(ico3, w);
    CHECK(fine < coarse);
    CHECK(fine > 0.4 * coarse);
  }

  CHECK(std::abs(signed_volume(make_cube()) - 1.0) < 1e-12);
  const MeshGraph cube = mesh_to_graph(make_cube());
  CHECK(std::abs(cube.volume - 1.0) < 1e-12);
  CHECK(cube.graph.graph().edge_count() == 2 * 18);
  // right-angle corners opposite the diagonals give cot 0, clamped to the floor
  CHECK(cube.clamped_weights > 0);

  const TriangleMesh back = parse_obj(format_obj(ico1));
  CHECK(back.vertices == ico1.vertices);
  CHECK(back.faces == ico1.faces);

  const TriangleMesh quad = parse_obj("# comment\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3 -1\n");
  CHECK(quad.faces.size() == 2);
  CHECK(quad.faces[1] == std::array<int, 3>{0, 2, 3});
  try {
    parse_obj("v 0 0 0\nv 1 0\n");
    FAIL("expected a parse error");
  } catch (const SchemaError& e) {
    CHECK(e.path() == "line 2");
  }
  CHECK_THROWS_AS(parse_obj("v 0 0 0\nf 1 2 3\n"), SchemaError);
}

TEST_CASE("cotangent weights do not depend on face order and are symmetric") {
  Rng rng(9);
  TriangleMesh mesh = make_deformed_icosphere(2, 1, rng);
  const MeshGraph a = mesh_to_graph(mesh);
  std::reverse(mesh.faces.begin(), mesh.faces.end());
  for (auto& f : mesh.faces) std::rotate(f.begin(), f.begin() + 1, f.end());
  const MeshGraph b = mesh_to_graph(mesh);
  REQUIRE(a.graph.graph().edge_count() == b.graph.graph().edge_count());
  for (std::size_t i = 0; i < a.graph.graph().edge_count(); ++i) {
    const Edge& ea = a.graph.graph().edges()[i];
    const Edge& eb = b.graph.graph().edges()[i];
    CHECK(ea.from == eb.from);
    CHECK(ea.to == eb.to);
    CHECK(std::abs(ea.weight - eb.weight) < 1e-12);
  }
  for (std::size_t i = 0; i + 1 < a.graph.graph().edge_count(); i += 2) {
    CHECK(a.graph.graph().edges()[i].weight == a.graph.graph().edges()[i + 1].weight);
  }
  CHECK((a.graph.channel(0) - b.graph.channel(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mesh normals follow rotations and ignore scaling") {
  Rng rng(10);
  const TriangleMesh mesh = make_deformed_icosphere(2, 0, rng);
  const Mat q = linalg::random_orthogonal(3, rng);
  TriangleMesh rotated = mesh;
  rotated.vertices = (q * mesh.vertices).eval();
  if (q.determinant() < 0) {
    for (auto& f : rotated.faces) std::swap(f[1], f[2]);
  }
  TriangleMesh scaled = mesh;
  scaled.vertices *= 2.5;
  const MeshGraph a = mesh_to_graph(mesh);
  const MeshGraph r = mesh_to_graph(rotated);
  const MeshGraph s = mesh_to_graph(scaled);
  CHECK((q * a.graph.channel(0) - r.graph.channel(0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.graph.channel(0) - s.graph.channel(0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(r.volume - a.volume) < 1e-12);
  CHECK(std::abs(s.volume - 2.5 * 2.5 * 2.5 * a.volume) < 1e-10);

  for (auto w : {NormalWeighting::Area, NormalWeighting::Uniform}) {
    const MeshGraph other = mesh_to_graph(mesh, w);
    CHECK((other.graph.channel(0) - a.graph.channel(0)).cwiseAbs().maxCoeff() > 0.0);
    CHECK((q * other.graph.channel(0) - mesh_to_graph(rotated, w).graph.channel(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("datasets are deterministic and labelled") {
  const Dataset a = make_synthetic_dataset(2, 10, SyntheticEmbedding::OneHotLorentz, 4);
  const Dataset b = make_synthetic_dataset(2, 10, SyntheticEmbedding::OneHotLorentz, 4);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].graph.label() == static_cast<int>(i % 3));
    CHECK(a[i].graph.graph().edges() == b[i].graph.graph().edges());
    CHECK(a[i].graph.graph().max_out_weight_sum() <= 1.0);
    CHECK(a[i].id == b[i].id);
  }
  const Dataset spd = make_synthetic_dataset(1, 10, SyntheticEmbedding::OneHotSpd, 4);
  CHECK(spd[0].graph.kind() == ManifoldKind::spd(5));
  const Dataset deg = make_synthetic_dataset(1, 10, SyntheticEmbedding::DegreeLorentz, 4, 3);
  CHECK(deg[0].graph.kind() == ManifoldKind::lorentz(3));
  CHECK_THROWS_AS(make_synthetic_dataset(1, 10, SyntheticEmbedding::DegreeLorentz, 4), ContractViolation);

  const Dataset meshes = make_mesh_dataset(2, 1, 5);
  REQUIRE(meshes.size() == 4);
  for (const auto& s : meshes) {
    CHECK(s.graph.kind() == ManifoldKind::sphere(2));
    CHECK(s.graph.covariates().size() == 1);
    CHECK(s.graph.graph().max_out_weight_sum() <= 1.0 + 1e-15);
  }
}
