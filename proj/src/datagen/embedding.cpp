#include <cmath>

#include "mgcn/datagen.hpp"
#include "mgcn/errors.hpp"

namespace mgcn {

namespace {

Vec lorentz_origin(int d) {
  Vec o = Vec::Zero(d + 1);
  o(d) = 1.0;
  return o;
}

}  // namespace

FeatureGraph embed_degree_hyperbolic(GraphPtr graph, const Mat& a, int label) {
  const int n = graph->node_count();
  if (a.cols() != n) {
    throw ContractViolation("degree embedding: linear map needs " + std::to_string(n) + " columns");
  }
  const int d = static_cast<int>(a.rows());
  const auto m = make_manifold(ManifoldKind::lorentz(d));
  const Vec o = lorentz_origin(d);
  Mat f(d + 1, n);
  for (int v = 0; v < n; ++v) {
    const int deg = graph->out_degree(v);
    if (deg >= n) throw ContractViolation("degree embedding: degree exceeds node count");
    Vec x = Vec::Zero(d + 1);
    x.head(d) = a.col(deg);
    f.col(v) = m->exp(o, x);
  }
  return FeatureGraph(std::move(graph), ManifoldKind::lorentz(d), {f}, label);
}

FeatureGraph embed_onehot_hyperbolic(GraphPtr graph, int label) {
  const int n = graph->node_count();
  const auto m = make_manifold(ManifoldKind::lorentz(n));
  const Vec o = lorentz_origin(n);
  Mat f(n + 1, n);
  for (int k = 0; k < n; ++k) f.col(k) = m->exp(o, Vec::Unit(n + 1, k));
  return FeatureGraph(std::move(graph), ManifoldKind::lorentz(n), {f}, label);
}

int onehot_spd_size(int nodes) {
  int n = 2;
  while (n * (n - 1) / 2 < nodes) ++n;
  return n;
}

FeatureGraph embed_onehot_spd(GraphPtr graph, int n_mat, int label) {
  const int nodes = graph->node_count();
  if (n_mat < 2 || n_mat * (n_mat - 1) / 2 < nodes) {
    throw ContractViolation("SPD one-hot embedding: " + std::to_string(n_mat) + "x" +
                            std::to_string(n_mat) + " matrices cannot hold " +
                            std::to_string(nodes) + " nodes");
  }
  const auto m = make_manifold(ManifoldKind::spd(n_mat));
  const Vec identity = m->origin();
  Mat f(n_mat * n_mat, nodes);
  int k = 0;
  for (int i = 0; i < n_mat && k < nodes; ++i) {
    for (int j = i + 1; j < n_mat && k < nodes; ++j, ++k) {
      Mat e = Mat::Zero(n_mat, n_mat);
      e(i, j) = e(j, i) = 1.0;
      f.col(k) = m->exp(identity, linalg::as_vector(e));
    }
  }
  return FeatureGraph(std::move(graph), ManifoldKind::spd(n_mat), {f}, label);
}

}  // namespace mgcn
