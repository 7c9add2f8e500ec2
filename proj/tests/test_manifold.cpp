#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mgcn/errors.hpp"
#include "mgcn/frechet.hpp"
#include "mgcn/isometry.hpp"
#include "mgcn/manifold.hpp"
#include "test_util.hpp"

using namespace mgcn;
using testutil::all_kinds;
using testutil::central;
using testutil::PointCurve;
using testutil::TangentCurve;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Vec mat2(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

}  // namespace

TEST_CASE("kind parsing and dimensions") {
  CHECK(parse_manifold_kind("Sphere", 2) == ManifoldKind::sphere(2));
  CHECK(ManifoldKind::lorentz(4).ambient_dim() == 5);
  CHECK(ManifoldKind::spd(3).ambient_dim() == 9);
  CHECK(ManifoldKind::spd(3).manifold_dim() == 6);
  CHECK_THROWS_AS(parse_manifold_kind("torus", 2), ContractViolation);
  CHECK_THROWS_AS(ManifoldKind::spd(1).validate(), ContractViolation);
  CHECK_THROWS_AS(ManifoldKind::euclidean(0).validate(), ContractViolation);
}

TEST_CASE("inner products from hand evaluation") {
  const auto e = make_manifold(ManifoldKind::euclidean(2));
  Vec x(2), y(2);
  x << 1, 0;
  y << 0, 1;
  CHECK(e->inner(Vec::Zero(2), x, y) == 0.0);

  const auto s = make_manifold(ManifoldKind::sphere(2));
  CHECK(s->inner(v3(0, 0, 1), v3(0.7, 0, 0), v3(0.7, 0, 0)) == doctest::Approx(0.49));

  // tr(I X I Y) with X = Y = I_2
  const auto spd = make_manifold(ManifoldKind::spd(2));
  CHECK(spd->inner(mat2(1, 0, 0, 1), mat2(1, 0, 0, 1), mat2(1, 0, 0, 1)) == doctest::Approx(2.0));
  // scaling the base point by 2 scales the metric by 1/4
  CHECK(spd->inner(mat2(2, 0, 0, 2), mat2(1, 0, 0, 1), mat2(1, 0, 0, 1)) == doctest::Approx(0.5));
}

TEST_CASE("closed-form exp, log and dist examples") {
  const double pi = std::numbers::pi;
  const auto s = make_manifold(ManifoldKind::sphere(2));
  const Vec north = v3(0, 0, 1);
  CHECK((s->exp(north, v3(pi / 2, 0, 0)) - v3(1, 0, 0)).norm() < 1e-15);
  CHECK((s->log(north, v3(1, 0, 0)) - v3(pi / 2, 0, 0)).norm() < 1e-15);
  CHECK(s->dist(north, v3(0, 0, -1)) == doctest::Approx(pi).epsilon(1e-15));
  CHECK_THROWS_AS(s->log(north, v3(0, 0, -1)), CutLocusError);
  CHECK_FALSE(s->log_defined(north, v3(0, 0, -1)));
  CHECK(s->log(north, north).norm() == 0.0);

  const auto spd = make_manifold(ManifoldKind::spd(2));
  const Vec id = mat2(1, 0, 0, 1);
  CHECK((spd->exp(id, mat2(0.3, 0, 0, -1.2)) - mat2(std::exp(0.3), 0, 0, std::exp(-1.2))).norm() <
        1e-14);
  CHECK(spd->dist(id, mat2(std::exp(1.0), 0, 0, 1)) == doctest::Approx(1.0).epsilon(1e-14));

  const auto h = make_manifold(ManifoldKind::lorentz(2));
  const Vec o = h->origin();
  CHECK(h->log(o, o).norm() == 0.0);
  CHECK(h->dist(o, o) == 0.0);
  // dist agrees with arcosh(-<p,q>_L) away from the diagonal
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vec p = h->random_point(rng);
    const Vec q = h->random_point(rng);
    const double ref = std::acosh(std::max(1.0, -linalg::minkowski(p, q)));
    CHECK(h->dist(p, q) == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("Lorentz log agrees with geodesic shooting") {
  // Solve exp_p(X) = q by Newton iteration on X from 0, using a numeric
  // Jacobian; compare with the closed-form logarithm.
  const auto h = make_manifold(ManifoldKind::lorentz(2));
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec p = h->random_point(rng);
    const Vec q = h->random_point(rng);
    // orthonormal frame of T_p from the boost of the origin frame
    Mat frame(3, 2);
    for (int k = 0; k < 2; ++k) {
      Vec w = Vec::Zero(3);
      w(k) = 1.0;
      const Vec ps = p.head(2);
      Vec x(3);
      x.head(2) = w.head(2) + (ps.dot(w.head(2)) / (1.0 + p(2))) * ps;
      x(2) = ps.dot(w.head(2));
      frame.col(k) = x;
    }
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int it = 0; it < 50; ++it) {
      const Vec r = h->exp(p, frame * c) - q;
      Mat jac(3, 2);
      for (int k = 0; k < 2; ++k) {
        Eigen::Vector2d dc = Eigen::Vector2d::Zero();
        dc(k) = 1e-6;
        jac.col(k) = (h->exp(p, frame * (c + dc)) - h->exp(p, frame * (c - dc))) / 2e-6;
      }
      c -= jac.colPivHouseholderQr().solve(r);
    }
    CHECK((frame * c - h->log(p, q)).norm() < 1e-7);
  }
}

TEST_CASE("random sampling satisfies invariants and is seed-deterministic") {
  for (const auto& kind : all_kinds()) {
    const auto m = make_manifold(kind);
    Rng a(7), b(7);
    for (int i = 0; i < 20; ++i) {
      const Vec p = m->random_point(a);
      CHECK(m->point_residual(p) < 1e-10);
      CHECK(p == m->random_point(b));
      const Vec x = m->random_tangent(p, 0.8, a);
      CHECK(m->tangent_residual(p, x) < 1e-10);
      CHECK(x == m->random_tangent(p, 0.8, b));
    }
  }
  Rng rng(7);
  const ManifoldPoint sp = random_point(ManifoldKind::sphere(2), rng);
  CHECK(sp.coords.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const ManifoldPoint pd = random_point(ManifoldKind::spd(3), rng);
  CHECK(linalg::sym_eig(linalg::as_matrix(pd.coords, 3)).values.minCoeff() > 0.0);
}

TEST_CASE("round trips and metric compatibility") {
  for (const auto& kind : all_kinds()) {
    INFO(kind.name());
    const auto m = make_manifold(kind);
    Rng rng(21);
    for (int i = 0; i < 200; ++i) {
      const Vec p = m->random_point(rng);
      // keep sphere pairs inside a normal convex neighbourhood
      const Vec q = m->exp(p, m->random_tangent(p, 0.5, rng));
      const Vec l = m->log(p, q);
      CHECK((m->exp(p, l) - q).norm() < 1e-9);
      CHECK(std::abs(m->norm(p, l) - m->dist(p, q)) < 1e-9);
      CHECK(std::abs(m->dist(p, q) - m->dist(q, p)) < 1e-9);
      const Vec x = m->random_tangent(p, 0.4, rng);
      for (double tau : {0.0, 0.25, 0.5, 1.0}) {
        CHECK(std::abs(m->dist(p, m->exp(p, tau * x)) - tau * m->norm(p, x)) < 1e-9);
      }
    }
  }
}

TEST_CASE("typed interface checks base points and invariants") {
  Rng rng(5);
  const ManifoldPoint p = random_point(ManifoldKind::sphere(2), rng);
  const ManifoldPoint q = random_point(ManifoldKind::sphere(2), rng);
  const TangentVector x = random_tangent(p, 1.0, rng);
  const TangentVector y = random_tangent(q, 1.0, rng);
  CHECK_THROWS_AS(inner(p, x, y), ContractViolation);
  CHECK_NOTHROW(inner(p, x, x));
  CHECK_THROWS_AS(check_point({ManifoldKind::sphere(2), v3(1, 1, 0)}), ContractViolation);
  CHECK_THROWS_AS(check_point({ManifoldKind::sphere(2), Vec::Zero(4)}), ContractViolation);
  CHECK_THROWS_AS(check_tangent({p, p.coords}), ContractViolation);
  CHECK_THROWS_AS(random_tangent(p, 0.0, rng), ContractViolation);
  const ManifoldPoint r = exp(x);
  CHECK((log(p, r).coords - x.coords).norm() < 1e-9);
}

TEST_CASE("flat limit: curved operations approach Euclidean ones") {
  // In a ball of radius r the second-order deviation from flat behaviour is
  // O(r^2) relative; shrinking r by 10 must shrink the relative error ~100x.
  for (const auto& kind : {ManifoldKind::sphere(2), ManifoldKind::lorentz(2)}) {
    const auto m = make_manifold(kind);
    Rng rng(9);
    const Vec p = m->random_point(rng);
    const Vec x = m->random_tangent(p, 1.0, rng);
    const Vec y = m->random_tangent(p, 1.0, rng);
    auto rel = [&](double r) {
      const Vec a = m->exp(p, r * x);
      const Vec b = m->exp(p, r * y);
      return std::abs(m->dist(a, b) - r * m->norm(p, x - y)) / (r * m->norm(p, x - y));
    };
    const double e2 = rel(1e-2);
    const double e3 = rel(1e-3);
    CHECK(e2 < 1e-3);
    CHECK(e3 < e2 / 50.0);
  }
}

TEST_CASE("adjoints agree with finite differences along valid curves") {
  const double h = 1e-5;
  for (const auto& kind : all_kinds()) {
    INFO(kind.name());
    const auto m = make_manifold(kind);
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      const Vec p0 = m->random_point(rng);
      const PointCurve pc{m.get(), p0, m->random_tangent(p0, 1.0, rng)};
      const Vec q0 = m->exp(p0, m->random_tangent(p0, 0.6, rng));
      const PointCurve qc{m.get(), q0, m->random_tangent(q0, 1.0, rng)};
      const TangentCurve xc{&pc, m->random_tangent(p0, 0.7, rng), m->random_tangent(p0, 1.0, rng)};
      const TangentCurve yc{&pc, m->random_tangent(p0, 0.7, rng), m->random_tangent(p0, 1.0, rng)};
      const Vec g = Vec::Random(m->ambient_dim());
      const Vec dp = central([&](double e) { return pc.at(e); }, h);
      const Vec dq = central([&](double e) { return qc.at(e); }, h);
      const Vec dx = central([&](double e) { return xc.at(e); }, h);
      const Vec dy = central([&](double e) { return yc.at(e); }, h);
      const Vec zero = Vec::Zero(m->ambient_dim());

      {  // exp
        Vec gp = zero, gx = zero;
        m->exp_vjp(p0, xc.x, g, gp, gx);
        const double fd = g.dot(central([&](double e) { return m->exp(pc.at(e), xc.at(e)); }, h));
        CHECK(testutil::rel_err(gp.dot(dp) + gx.dot(dx), fd) < 1e-6);
      }
      {  // log
        Vec gp = zero, gq = zero;
        m->log_vjp(p0, q0, g, gp, gq);
        const double fd = g.dot(central([&](double e) { return m->log(pc.at(e), qc.at(e)); }, h));
        CHECK(testutil::rel_err(gp.dot(dp) + gq.dot(dq), fd) < 1e-6);
      }
      {  // dist
        Vec gp = zero, gq = zero;
        m->dist_vjp(p0, q0, 1.3, gp, gq);
        const double fd =
            central([&](double e) { return Vec::Constant(1, 1.3 * m->dist(pc.at(e), qc.at(e))); }, h)(0);
        CHECK(testutil::rel_err(gp.dot(dp) + gq.dot(dq), fd) < 1e-6);
      }
      {  // inner
        Vec gp = zero, gx = zero, gy = zero;
        m->inner_vjp(p0, xc.x, yc.x, 0.9, gp, gx, gy);
        const double fd = central(
            [&](double e) { return Vec::Constant(1, 0.9 * m->inner(pc.at(e), xc.at(e), yc.at(e))); },
            h)(0);
        CHECK(testutil::rel_err(gp.dot(dp) + gx.dot(dx) + gy.dot(dy), fd) < 1e-6);
      }
    }
  }
}

TEST_CASE("adjoints near coincident points") {
  // log and exp at tiny separations go through the series branches
  const double h = 1e-7;
  for (const auto& kind : {ManifoldKind::sphere(2), ManifoldKind::lorentz(2), ManifoldKind::spd(2)}) {
    INFO(kind.name());
    const auto m = make_manifold(kind);
    Rng rng(4);
    const Vec p0 = m->random_point(rng);
    const PointCurve pc{m.get(), p0, m->random_tangent(p0, 1.0, rng)};
    const Vec q0 = m->exp(p0, m->random_tangent(p0, 1e-5, rng));
    const PointCurve qc{m.get(), q0, m->random_tangent(q0, 1.0, rng)};
    const Vec g = Vec::Random(m->ambient_dim());
    Vec gp = Vec::Zero(m->ambient_dim()), gq = gp;
    m->log_vjp(p0, q0, g, gp, gq);
    const double fd = g.dot(central([&](double e) { return m->log(pc.at(e), qc.at(e)); }, h));
    const double an = gp.dot(central([&](double e) { return pc.at(e); }, h)) +
                      gq.dot(central([&](double e) { return qc.at(e); }, h));
    CHECK(testutil::rel_err(an, fd) < 1e-5);
  }
}

TEST_CASE("isometries preserve distances and commute with exp and log") {
  for (const auto& kind : all_kinds()) {
    INFO(kind.name());
    const auto m = make_manifold(kind);
    Rng rng(31);
    int reflections = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const Isometry phi = Isometry::random(kind, rng);
      CHECK(phi.representation_residual() < 1e-12);
      if (phi.linear().determinant() < 0) ++reflections;
      const Vec p = m->random_point(rng);
      const Vec q = m->exp(p, m->random_tangent(p, 0.6, rng));
      const Vec x = m->random_tangent(p, 0.7, rng);
      CHECK(std::abs(m->dist(phi.apply(p), phi.apply(q)) - m->dist(p, q)) < 1e-9);
      CHECK((m->exp(phi.apply(p), phi.push(x)) - phi.apply(m->exp(p, x))).norm() < 1e-9);
      CHECK((phi.push(m->log(p, q)) - m->log(phi.apply(p), phi.apply(q))).norm() < 1e-9);

      const Isometry psi = Isometry::random(kind, rng);
      CHECK(phi.compose(psi).representation_residual() < 1e-10);
      CHECK((phi.compose(psi).apply(p) - phi.apply(psi.apply(p))).norm() < 1e-10);
      CHECK((phi.inverse().apply(phi.apply(p)) - p).norm() < 1e-10);
    }
    if (kind.tag != ManifoldTag::SPD) {
      // orientation-reversing elements appear about half the time
      CHECK(reflections > 25);
      CHECK(reflections < 75);
    }
  }
  CHECK_THROWS_AS(Isometry::identity(ManifoldKind::sphere(2))
                      .apply(ManifoldPoint{ManifoldKind::sphere(3), Vec::Unit(4, 0)}),
                  ContractViolation);
}

TEST_CASE("orthogonal congruence preserves the affine-invariant distance") {
  const auto m = make_manifold(ManifoldKind::spd(3));
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const Isometry phi(ManifoldKind::spd(3), linalg::random_orthogonal(3, rng));
    const Vec p = m->random_point(rng), q = m->random_point(rng);
    CHECK(std::abs(m->dist(phi.apply(p), phi.apply(q)) - m->dist(p, q)) < 1e-9);
  }
}

TEST_CASE("Frechet mean") {
  Rng rng(41);
  SUBCASE("flat reduction") {
    const auto m = make_manifold(ManifoldKind::euclidean(3));
    const Mat pts = Mat::Random(3, 6);
    Vec w = Vec::Random(6).cwiseAbs() + Vec::Constant(6, 0.1);
    w /= w.sum();
    CHECK((frechet_mean(*m, pts, w).mean - pts * w).norm() < 1e-12);
  }
  SUBCASE("equal points") {
    const auto m = make_manifold(ManifoldKind::spd(2));
    const Vec p = m->random_point(rng);
    Mat pts(4, 3);
    pts << p, p, p;
    CHECK((frechet_mean(*m, pts, Vec::Constant(3, 1.0 / 3)).mean - p).norm() < 1e-14);
  }
  SUBCASE("sphere midpoint") {
    const auto m = make_manifold(ManifoldKind::sphere(2));
    const Vec p = m->random_point(rng);
    const Vec q = m->exp(p, m->random_tangent(p, 0.8, rng));
    Mat pts(3, 2);
    pts << p, q;
    const Vec mu = frechet_mean(*m, pts, Vec::Constant(2, 0.5)).mean;
    CHECK(std::abs(m->dist(mu, p) - m->dist(mu, q)) < 1e-9);
    CHECK((mu - m->exp(p, 0.5 * m->log(p, q))).norm() < 1e-9);
  }
  SUBCASE("optimality residual and isometry equivariance") {
    for (const auto& kind : all_kinds()) {
      const auto m = make_manifold(kind);
      for (int trial = 0; trial < 20; ++trial) {
        const Vec c = m->random_point(rng);
        Mat pts(m->ambient_dim(), 5);
        for (int i = 0; i < 5; ++i) pts.col(i) = m->exp(c, m->random_tangent(c, 0.4, rng));
        Vec w = Vec::Random(5).cwiseAbs() + Vec::Constant(5, 0.05);
        w /= w.sum();
        const FrechetResult r = frechet_mean(*m, pts, w);
        CHECK(frechet_residual(*m, r.mean, pts, w) < 1e-9);
        const Isometry phi = Isometry::random(kind, rng);
        const Vec mu2 = frechet_mean(*m, phi.apply_columns(pts), w).mean;
        CHECK((mu2 - phi.apply(r.mean)).norm() < 1e-8);
        // replaying the accepted steps reproduces the mean
        Vec mu = pts.col(r.start_index);
        for (double tau : r.steps) {
          Vec v = Vec::Zero(m->ambient_dim());
          for (int i = 0; i < 5; ++i) m->add_log(mu, pts.col(i), w(i), v);
          mu = m->exp(mu, tau * v);
        }
        CHECK((mu - r.mean).norm() == 0.0);
      }
    }
  }
  SUBCASE("typed wrapper validation") {
    const ManifoldKind k = ManifoldKind::sphere(2);
    std::vector<ManifoldPoint> pts{{k, v3(0, 0, 1)}, {k, v3(1, 0, 0)}};
    std::vector<double> w{0.5, 0.5};
    CHECK_NOTHROW(frechet_mean(pts, w));
    std::vector<double> bad{0.7, 0.7};
    CHECK_THROWS_AS(frechet_mean(pts, bad), ContractViolation);
    std::vector<double> neg{1.5, -0.5};
    CHECK_THROWS_AS(frechet_mean(pts, neg), ContractViolation);
    std::vector<ManifoldPoint> spread{{k, v3(0, 0, 1)}, {k, v3(1, 0, 0)}, {k, v3(0, 0, -1)}};
    std::vector<double> w3{0.3, 0.4, 0.3};
    CHECK_THROWS_AS(frechet_mean(spread, w3), ContractViolation);
  }
  SUBCASE("non-convergence is reported") {
    const auto m = make_manifold(ManifoldKind::sphere(2));
    const Vec c = m->random_point(rng);
    Mat pts(3, 3);
    for (int i = 0; i < 3; ++i) pts.col(i) = m->exp(c, m->random_tangent(c, 0.8, rng));
    FrechetOptions opt;
    opt.max_iterations = 1;
    CHECK_THROWS_AS(frechet_mean(*m, pts, Vec::Constant(3, 1.0 / 3), opt), NonConvergence);
  }
}
