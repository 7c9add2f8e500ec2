#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "mgcn/errors.hpp"
#include "mgcn/frechet.hpp"
#include "mgcn/graph.hpp"

namespace mgcn {

Graph::Graph(int node_count, std::vector<Edge> edges) : n_(node_count), edges_(std::move(edges)) {
  if (n_ < 0) throw ContractViolation("graph: negative node count");
  std::set<std::pair<int, int>> seen;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    std::ostringstream where;
    where << "graph: edge " << k << " (" << e.from << " -> " << e.to << ")";
    if (e.from < 0 || e.from >= n_ || e.to < 0 || e.to >= n_) {
      throw ContractViolation(where.str() + " has a node index out of range");
    }
    if (e.from == e.to) throw ContractViolation(where.str() + " is a self-loop");
    if (!(std::isfinite(e.weight) && e.weight > 0.0)) {
      throw ContractViolation(where.str() + " has a non-positive or non-finite weight");
    }
    if (!seen.emplace(e.from, e.to).second) {
      throw ContractViolation(where.str() + " duplicates an earlier edge");
    }
  }
  build_index();
}

Graph Graph::undirected(int node_count, const std::vector<std::pair<int, int>>& pairs,
                        double weight) {
  std::vector<Edge> edges;
  edges.reserve(2 * pairs.size());
  for (const auto& [a, b] : pairs) {
    edges.push_back({a, b, weight});
    edges.push_back({b, a, weight});
  }
  return Graph(node_count, std::move(edges));
}

void Graph::build_index() {
  offsets_.assign(n_ + 1, 0);
  for (const Edge& e : edges_) ++offsets_[e.from + 1];
  for (int v = 0; v < n_; ++v) offsets_[v + 1] += offsets_[v];
  out_index_.assign(edges_.size(), 0);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t k = 0; k < edges_.size(); ++k) out_index_[fill[edges_[k].from]++] = static_cast<int>(k);
}

double Graph::out_weight_sum(int v) const {
  double s = 0.0;
  for (int k : out_edges(v)) s += edges_[k].weight;
  return s;
}

double Graph::max_out_weight_sum() const {
  double b = 0.0;
  for (int v = 0; v < n_; ++v) b = std::max(b, out_weight_sum(v));
  return b;
}

Graph Graph::permuted(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != n_) throw ContractViolation("permutation has wrong length");
  std::vector<char> hit(n_, 0);
  for (int p : perm) {
    if (p < 0 || p >= n_ || hit[p]) throw ContractViolation("not a permutation");
    hit[p] = 1;
  }
  std::vector<Edge> edges = edges_;
  for (Edge& e : edges) {
    e.from = perm[e.from];
    e.to = perm[e.to];
  }
  return Graph(n_, std::move(edges));
}

Graph Graph::with_weights(const std::vector<double>& weights) const {
  if (weights.size() != edges_.size()) throw ContractViolation("weight count does not match edges");
  std::vector<Edge> edges = edges_;
  for (std::size_t k = 0; k < edges.size(); ++k) edges[k].weight = weights[k];
  return Graph(n_, std::move(edges));
}

std::vector<int> Graph::hop_distances(int source) const {
  std::vector<int> d(n_, -1);
  std::deque<int> queue{source};
  d[source] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int k : out_edges(v)) {
      const int u = edges_[k].to;
      if (d[u] < 0) {
        d[u] = d[v] + 1;
        queue.push_back(u);
      }
    }
  }
  return d;
}

// ---------------------------------------------------------------------------

FeatureGraph::FeatureGraph(GraphPtr graph, ManifoldKind kind, std::vector<Mat> channels, int label,
                           Vec covariates, double point_tol)
    : graph_(std::move(graph)),
      kind_(kind),
      channels_(std::move(channels)),
      label_(label),
      covariates_(std::move(covariates)) {
  if (!graph_) throw ContractViolation("feature graph without a graph");
  kind_.validate();
  const auto m = make_manifold(kind_);
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const Mat& f = channels_[c];
    if (f.rows() != kind_.ambient_dim() || f.cols() != graph_->node_count()) {
      std::ostringstream msg;
      msg << "channel " << c << " has shape " << f.rows() << "x" << f.cols() << ", expected "
          << kind_.ambient_dim() << "x" << graph_->node_count();
      throw ContractViolation(msg.str());
    }
    for (Eigen::Index v = 0; v < f.cols(); ++v) {
      const double r = m->point_residual(f.col(v));
      if (!(r <= point_tol)) {
        std::ostringstream msg;
        msg << "channel " << c << " node " << v << " is not a valid point of " << kind_.name()
            << " (residual " << r << ")";
        throw ContractViolation(msg.str());
      }
    }
  }
}

const Mat& FeatureGraph::channel(int i) const {
  if (i < 0 || i >= channel_count()) throw ContractViolation("channel index out of range");
  return channels_[i];
}

FeatureGraph FeatureGraph::with_channels(std::vector<Mat> channels) const {
  return FeatureGraph(graph_, kind_, std::move(channels), label_, covariates_);
}

FeatureGraph FeatureGraph::with_graph(GraphPtr graph) const {
  return FeatureGraph(std::move(graph), kind_, channels_, label_, covariates_);
}

FeatureGraph FeatureGraph::with_label(int label) const {
  FeatureGraph g = *this;
  g.label_ = label;
  return g;
}

FeatureGraph FeatureGraph::with_covariates(Vec covariates) const {
  FeatureGraph g = *this;
  g.covariates_ = std::move(covariates);
  return g;
}

// ---------------------------------------------------------------------------

std::vector<AdmissibilityIssue> validate_admissible(const FeatureGraph& g) {
  std::vector<AdmissibilityIssue> issues;
  if (g.kind().is_hadamard()) return issues;
  const auto m = make_manifold(g.kind());
  const auto& edges = g.graph().edges();
  for (int c = 0; c < g.channel_count(); ++c) {
    const Mat& f = g.channel(c);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const Edge& e = edges[k];
      if (!m->log_defined(f.col(e.from), f.col(e.to))) {
        issues.push_back({static_cast<int>(k), e.from, e.to, c});
      }
    }
  }
  return issues;
}

TangentField laplacian(const Manifold& m, const Graph& g, const Mat& features, int channel) {
  if (features.cols() != g.node_count() || features.rows() != m.ambient_dim()) {
    throw ContractViolation("laplacian: feature matrix has the wrong shape");
  }
  TangentField out = TangentField::Zero(features.rows(), features.cols());
  const auto& edges = g.edges();
  for (int v = 0; v < g.node_count(); ++v) {
    const Vec p = features.col(v);
    for (int k : g.out_edges(v)) {
      const Edge& e = edges[k];
      try {
        out.col(v) -= e.weight * m.log(p, features.col(e.to));
      } catch (const CutLocusError& err) {
        std::ostringstream msg;
        msg << "edge " << k << " (" << e.from << " -> " << e.to << ")";
        if (channel >= 0) msg << " in channel " << channel;
        msg << ": " << err.what();
        throw CutLocusError(msg.str(), e.from, e.to, channel);
      }
    }
  }
  return out;
}

TangentField laplacian(const FeatureGraph& g, int channel) {
  return laplacian(*make_manifold(g.kind()), g.graph(), g.channel(channel), channel);
}

Graph normalize_weights(const Graph& g) {
  const double b = g.max_out_weight_sum();
  if (!(b > 1.0)) return g;
  std::vector<double> w;
  w.reserve(g.edge_count());
  for (const Edge& e : g.edges()) w.push_back(e.weight / b);
  return g.with_weights(w);
}

FeatureGraph normalize_weights(const FeatureGraph& g) {
  if (!(g.graph().max_out_weight_sum() > 1.0)) return g;
  return g.with_graph(std::make_shared<Graph>(normalize_weights(g.graph())));
}

double graph_diameter(const Manifold& m, const Mat& features) {
  double d = 0.0;
  for (Eigen::Index a = 0; a < features.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < features.cols(); ++b) {
      d = std::max(d, m.dist(features.col(a), features.col(b)));
    }
  }
  return d;
}

double graph_diameter(const FeatureGraph& g, int channel) {
  return graph_diameter(*make_manifold(g.kind()), g.channel(channel));
}

Ball bounding_ball_estimate(const Manifold& m, const Mat& features) {
  if (features.cols() == 0) throw ContractViolation("bounding ball of an empty feature set");
  const Eigen::Index n = features.cols();
  Ball ball;
  ball.center = frechet_mean(m, features, Vec::Constant(n, 1.0 / static_cast<double>(n))).mean;
  for (Eigen::Index v = 0; v < n; ++v) {
    ball.radius = std::max(ball.radius, m.dist(ball.center, features.col(v)));
  }
  return ball;
}

Ball bounding_ball_estimate(const FeatureGraph& g, int channel) {
  return bounding_ball_estimate(*make_manifold(g.kind()), g.channel(channel));
}

Mat permute_columns(const Mat& features, const std::vector<int>& perm) {
  if (static_cast<Eigen::Index>(perm.size()) != features.cols()) {
    throw ContractViolation("permutation has wrong length");
  }
  Mat out(features.rows(), features.cols());
  for (std::size_t v = 0; v < perm.size(); ++v) out.col(perm[v]) = features.col(static_cast<Eigen::Index>(v));
  return out;
}

}  // namespace mgcn
