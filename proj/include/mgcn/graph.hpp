#pragma once

#include <memory>
#include <vector>

#include "mgcn/manifold.hpp"

namespace mgcn {

struct Edge {
  int from = 0;
  int to = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed weighted graph structure. Edges are stored in insertion order;
/// an out-adjacency index groups them by source node while keeping that order.
class Graph {
 public:
  Graph() = default;
  /// Throws ContractViolation on out-of-range indices, self-loops, duplicate
  /// directed edges, or weights that are not finite and positive.
  Graph(int node_count, std::vector<Edge> edges);

  /// Expands each undirected pair {a, b} into the directed edges (a,b), (b,a).
  static Graph undirected(int node_count, const std::vector<std::pair<int, int>>& pairs,
                          double weight);

  int node_count() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  /// Indices into edges() of the out-edges of v.
  std::span<const int> out_edges(int v) const {
    return {out_index_.data() + offsets_[v], out_index_.data() + offsets_[v + 1]};
  }
  int out_degree(int v) const { return offsets_[v + 1] - offsets_[v]; }
  double out_weight_sum(int v) const;
  /// b = max_v sum_{u ~ v} w(v,u)
  double max_out_weight_sum() const;

  /// Node v of this graph becomes node perm[v] of the result.
  Graph permuted(const std::vector<int>& perm) const;
  Graph with_weights(const std::vector<double>& weights) const;
  /// Hop distance along out-edges from `source`; unreachable nodes get -1.
  std::vector<int> hop_distances(int source) const;

 private:
  void build_index();

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> offsets_{0};
  std::vector<int> out_index_;
};

using GraphPtr = std::shared_ptr<const Graph>;

/// Graph with c channels of manifold-valued node features. Every channel is an
/// (ambient dim) x (node count) matrix of points of the same manifold kind.
class FeatureGraph {
 public:
  FeatureGraph() = default;
  /// Validates shapes and point invariants (tolerance `point_tol` on the
  /// kind-specific residual).
  FeatureGraph(GraphPtr graph, ManifoldKind kind, std::vector<Mat> channels, int label = -1,
               Vec covariates = Vec(), double point_tol = 1e-9);

  const Graph& graph() const { return *graph_; }
  const GraphPtr& graph_ptr() const { return graph_; }
  const ManifoldKind& kind() const { return kind_; }
  int node_count() const { return graph_->node_count(); }
  int channel_count() const { return static_cast<int>(channels_.size()); }
  const std::vector<Mat>& channels() const { return channels_; }
  const Mat& channel(int i) const;
  int label() const { return label_; }
  const Vec& covariates() const { return covariates_; }

  FeatureGraph with_channels(std::vector<Mat> channels) const;
  FeatureGraph with_graph(GraphPtr graph) const;
  FeatureGraph with_label(int label) const;
  FeatureGraph with_covariates(Vec covariates) const;

 private:
  GraphPtr graph_ = std::make_shared<Graph>();
  ManifoldKind kind_;
  std::vector<Mat> channels_;
  int label_ = -1;
  Vec covariates_;
};

/// Tangent vectors, one column per node, each based at the corresponding
/// column of the channel it was computed from.
using TangentField = Mat;

struct AdmissibilityIssue {
  int edge = 0;
  int from = 0;
  int to = 0;
  int channel = 0;
};

/// Every (edge, channel) pair for which log_{f(from)} f(to) is undefined.
std::vector<AdmissibilityIssue> validate_admissible(const FeatureGraph& g);

/// Delta f(v) = -sum_{u ~ v} w(v,u) log_{f(v)} f(u). Throws CutLocusError
/// naming the edge (and `channel`, if given) when a logarithm is undefined.
TangentField laplacian(const Manifold& m, const Graph& g, const Mat& features, int channel = -1);
TangentField laplacian(const FeatureGraph& g, int channel);

/// Divides all weights by b = max_v sum_u w(v,u) when b > 1.
Graph normalize_weights(const Graph& g);
FeatureGraph normalize_weights(const FeatureGraph& g);

/// Largest pairwise distance between node features.
double graph_diameter(const Manifold& m, const Mat& features);
double graph_diameter(const FeatureGraph& g, int channel);

struct Ball {
  Vec center;
  double radius = 0.0;
};

/// Ball around the unweighted Frechet mean that contains every feature.
Ball bounding_ball_estimate(const Manifold& m, const Mat& features);
Ball bounding_ball_estimate(const FeatureGraph& g, int channel);

/// Applies a node permutation to a feature matrix: column v moves to perm[v].
Mat permute_columns(const Mat& features, const std::vector<int>& perm);

}  // namespace mgcn
