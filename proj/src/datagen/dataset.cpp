#include <cstdio>

#include "mgcn/datagen.hpp"
#include "mgcn/errors.hpp"

namespace mgcn {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::string sample_id(std::string_view prefix, int index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*s_%03d", static_cast<int>(prefix.size()), prefix.data(), index);
  return buf;
}

}  // namespace

Dataset make_synthetic_dataset(int per_class, int nodes, SyntheticEmbedding embedding,
                               std::uint64_t seed, int dim) {
  if (per_class < 1) throw ContractViolation("dataset needs at least one graph per class");
  if (embedding == SyntheticEmbedding::DegreeLorentz && dim < 1) {
    throw ContractViolation("degree embedding needs a target dimension");
  }
  const GraphFamily families[] = {GraphFamily::ErdosRenyi, GraphFamily::BarabasiAlbert,
                                  GraphFamily::WattsStrogatz};
  Dataset out;
  for (int i = 0; i < per_class; ++i) {
    for (int label = 0; label < 3; ++label) {
      const int index = static_cast<int>(out.size());
      SyntheticSpec spec;
      spec.family = families[label];
      spec.nodes = nodes;
      spec.seed = derive_seed(seed, static_cast<std::uint64_t>(index));
      auto graph = std::make_shared<const Graph>(normalize_weights(gen_synthetic(spec).graph));
      FeatureGraph fg;
      switch (embedding) {
        case SyntheticEmbedding::OneHotLorentz:
          fg = embed_onehot_hyperbolic(graph, label);
          break;
        case SyntheticEmbedding::OneHotSpd:
          fg = embed_onehot_spd(graph, onehot_spd_size(nodes), label);
          break;
        case SyntheticEmbedding::DegreeLorentz: {
          const ManifoldKind kind = ManifoldKind::lorentz(dim);
          const Vec o = make_manifold(kind)->origin();
          fg = FeatureGraph(graph, kind, {o.replicate(1, nodes)}, label);
          break;
        }
      }
      out.push_back({std::move(fg), sample_id(family_name(spec.family), index), spec.seed});
    }
  }
  return out;
}

Dataset make_mesh_dataset(int per_class, int subdivisions, std::uint64_t seed) {
  if (per_class < 1) throw ContractViolation("dataset needs at least one mesh per class");
  Dataset out;
  for (int i = 0; i < per_class; ++i) {
    for (int label = 0; label < 2; ++label) {
      const int index = static_cast<int>(out.size());
      const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(index));
      Rng rng(s);
      const MeshGraph mg = mesh_to_graph(make_deformed_icosphere(subdivisions, label, rng));
      out.push_back({normalize_weights(mg.graph).with_label(label),
                     sample_id(label == 0 ? "smooth" : "bumpy", index), s});
    }
  }
  return out;
}

}  // namespace mgcn
