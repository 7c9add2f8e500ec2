#include <algorithm>
#include <set>

#include "mgcn/datagen.hpp"
#include "mgcn/errors.hpp"

namespace mgcn {

std::string_view family_name(GraphFamily f) {
  switch (f) {
    case GraphFamily::ErdosRenyi: return "erdos_renyi";
    case GraphFamily::BarabasiAlbert: return "barabasi_albert";
    case GraphFamily::WattsStrogatz: return "watts_strogatz";
  }
  return "unknown";
}

GraphFamily parse_family(std::string_view name) {
  if (name == "erdos_renyi" || name == "er") return GraphFamily::ErdosRenyi;
  if (name == "barabasi_albert" || name == "ba") return GraphFamily::BarabasiAlbert;
  if (name == "watts_strogatz" || name == "ws") return GraphFamily::WattsStrogatz;
  throw ContractViolation("unknown graph family '" + std::string(name) + "'");
}

void SyntheticSpec::validate() const {
  if (nodes < 3) throw ContractViolation("synthetic graphs need at least 3 nodes");
  if (edge_probability >= 0.0 && edge_probability > 1.0) {
    throw ContractViolation("edge probability must lie in [0, 1]");
  }
  if (rewiring >= 0.0 && rewiring > 1.0) throw ContractViolation("rewiring must lie in [0, 1]");
  if (attachment == 0 || attachment < -1) throw ContractViolation("attachment must be >= 1");
  if (ring_neighbors == 0 || ring_neighbors < -1) {
    throw ContractViolation("ring neighbour count must be >= 1");
  }
}

namespace {

using PairSet = std::set<std::pair<int, int>>;

void add_pair(PairSet& s, int a, int b) { s.insert({std::min(a, b), std::max(a, b)}); }

PairSet erdos_renyi(int n, double p, Rng& rng) {
  std::bernoulli_distribution coin(p);
  PairSet s;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (coin(rng)) s.insert({a, b});
    }
  }
  return s;
}

// Star on m + 1 nodes, then each new node attaches to m distinct existing
// nodes chosen proportionally to degree.
PairSet barabasi_albert(int n, int m, Rng& rng) {
  PairSet s;
  std::vector<int> repeated;
  for (int v = 1; v <= m; ++v) {
    add_pair(s, 0, v);
    repeated.push_back(0);
    repeated.push_back(v);
  }
  for (int v = m + 1; v < n; ++v) {
    std::set<int> targets;
    std::uniform_int_distribution<std::size_t> pick(0, repeated.size() - 1);
    while (static_cast<int>(targets.size()) < m) targets.insert(repeated[pick(rng)]);
    for (int u : targets) {
      add_pair(s, v, u);
      repeated.push_back(u);
      repeated.push_back(v);
    }
  }
  return s;
}

// Ring lattice with max(1, k/2) neighbours per side, each lattice edge
// rewired with probability p to a uniformly chosen new endpoint.
PairSet watts_strogatz(int n, int k, double p, Rng& rng) {
  const int half = std::max(1, k / 2);
  PairSet s;
  for (int j = 1; j <= half; ++j) {
    for (int v = 0; v < n; ++v) add_pair(s, v, (v + j) % n);
  }
  std::bernoulli_distribution coin(p);
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int j = 1; j <= half; ++j) {
    for (int v = 0; v < n; ++v) {
      if (!coin(rng)) continue;
      const int u = (v + j) % n;
      std::set<int> taken;
      for (const auto& [a, b] : s) {
        if (a == v) taken.insert(b);
        if (b == v) taken.insert(a);
      }
      if (static_cast<int>(taken.size()) >= n - 1) continue;
      int w = node(rng);
      while (w == v || taken.contains(w)) w = node(rng);
      s.erase({std::min(v, u), std::max(v, u)});
      add_pair(s, v, w);
    }
  }
  return s;
}

}  // namespace

SyntheticGraph gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int n = spec.nodes;
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unit_range(0.1, 1.0);
  std::uniform_int_distribution<int> count_range(1, 2 * n);

  SyntheticGraph out;
  out.family = spec.family;
  PairSet pairs;
  switch (spec.family) {
    case GraphFamily::ErdosRenyi:
      out.edge_probability = spec.edge_probability >= 0.0 ? spec.edge_probability : unit_range(rng);
      pairs = erdos_renyi(n, out.edge_probability, rng);
      break;
    case GraphFamily::BarabasiAlbert: {
      const int m = spec.attachment > 0 ? spec.attachment : count_range(rng);
      out.clamped = m > n - 1;
      out.attachment = std::min(m, n - 1);
      pairs = barabasi_albert(n, out.attachment, rng);
      break;
    }
    case GraphFamily::WattsStrogatz: {
      const int k = spec.ring_neighbors > 0 ? spec.ring_neighbors : count_range(rng);
      out.clamped = k > n - 1;
      out.ring_neighbors = std::min(k, n - 1);
      out.rewiring = spec.rewiring >= 0.0 ? spec.rewiring : unit_range(rng);
      pairs = watts_strogatz(n, out.ring_neighbors, out.rewiring, rng);
      break;
    }
  }
  out.graph = Graph::undirected(n, {pairs.begin(), pairs.end()}, 1.0 / n);
  return out;
}

}  // namespace mgcn
