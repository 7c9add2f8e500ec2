#pragma once
// Dataset generators: random graph families with manifold embeddings, plus
// triangle meshes turned into sphere-valued feature graphs.
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mgcn/graph.hpp"

namespace mgcn {

/// Independent child seed for stream `index` of a base seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

enum class GraphFamily { ErdosRenyi, BarabasiAlbert, WattsStrogatz };

std::string_view family_name(GraphFamily f);
GraphFamily parse_family(std::string_view name);

/// Random-graph request. Hyperparameters left negative are drawn from their
/// default ranges: ER p ~ U[0.1, 1]; BA m and WS k ~ U{1..2n}, clamped to
/// n - 1; WS rewiring ~ U[0.1, 1].
struct SyntheticSpec {
  GraphFamily family = GraphFamily::ErdosRenyi;
  int nodes = 30;
  std::uint64_t seed = 0;
  double edge_probability = -1.0;
  int attachment = -1;
  int ring_neighbors = -1;
  double rewiring = -1.0;
  /// Throws ContractViolation on n < 3 or out-of-range explicit values.
  void validate() const;
};

struct SyntheticGraph {
  Graph graph;
  GraphFamily family = GraphFamily::ErdosRenyi;
  /// The hyperparameters actually used (after drawing and clamping).
  double edge_probability = 0.0;
  int attachment = 0;
  int ring_neighbors = 0;
  double rewiring = 0.0;
  /// True when a drawn m or k exceeded n - 1.
  bool clamped = false;
};

/// Undirected graph expanded to both directions, every weight 1/n.
/// Deterministic in the spec (seed included).
SyntheticGraph gen_synthetic(const SyntheticSpec& spec);

/// exp_o([A e_deg; 0]) on Lorentz(d), with deg the out-degree of the node and
/// A a d x (n) matrix, n the node count.
FeatureGraph embed_degree_hyperbolic(GraphPtr graph, const Mat& a, int label = -1);
/// Node k -> exp_o(e_k) on Lorentz(n).
FeatureGraph embed_onehot_hyperbolic(GraphPtr graph, int label = -1);
/// Node k -> exp_I(E_k) on SPD(n_mat), E_k symmetric with ones at the k-th
/// strictly upper-triangular position (row-major order) and its mirror.
FeatureGraph embed_onehot_spd(GraphPtr graph, int n_mat, int label = -1);
/// Smallest n with n(n-1)/2 >= nodes.
int onehot_spd_size(int nodes);

// ---------------------------------------------------------------------------
// Meshes

struct TriangleMesh {
  Eigen::Matrix3Xd vertices;
  std::vector<std::array<int, 3>> faces;
  /// Throws ContractViolation on bad indices or faces with area below 1e-12.
  void validate() const;
};

/// Parses OBJ text (v and f lines; other lines ignored, f may use v/vt/vn
/// and negative indices; polygons are fan-triangulated). Errors name the line.
TriangleMesh parse_obj(std::string_view text);
std::string format_obj(const TriangleMesh& mesh);
TriangleMesh read_obj(const std::string& path);
void write_obj(const TriangleMesh& mesh, const std::string& path);
/// Undirected edges shared by more than two faces.
std::vector<std::pair<int, int>> non_manifold_edges(const TriangleMesh& mesh);

TriangleMesh make_icosphere(int subdivisions);
/// Unit cube [0,1]^3 with outward-facing triangles.
TriangleMesh make_cube();

/// How incident face normals are combined into a vertex normal.
enum class NormalWeighting {
  /// cross(a, b) / (|a|^2 |b|^2) per corner with edge vectors a, b; exact when
  /// the vertices lie on a sphere.
  Max,
  /// face normal times face area
  Area,
  /// unit face normals
  Uniform,
};

struct MeshGraph {
  /// Sphere(2) feature graph of vertex normals; covariate 0 is the volume.
  FeatureGraph graph;
  double volume = 0.0;
  /// Edges whose cotangent weight was raised to the positive floor.
  int clamped_weights = 0;
};

inline constexpr double kCotangentFloor = 1e-8;

/// Cotangent edge weights (cot a + cot b)/2, vertex normals averaged from
/// incident face normals, signed volume. Throws ContractViolation naming a vertex whose
/// normal vanishes.
MeshGraph mesh_to_graph(const TriangleMesh& mesh, NormalWeighting weighting = NormalWeighting::Max);
/// sum over faces of det(a, b, c) / 6
double signed_volume(const TriangleMesh& mesh);

/// Icosphere with seeded radial noise: class 0 uses low-frequency bumps,
/// class 1 high-frequency bumps.
TriangleMesh make_deformed_icosphere(int subdivisions, int label, Rng& rng);

// ---------------------------------------------------------------------------
// Datasets

struct Sample {
  FeatureGraph graph;
  std::string id;
  std::uint64_t seed = 0;
};

using Dataset = std::vector<Sample>;

enum class SyntheticEmbedding { OneHotLorentz, DegreeLorentz, OneHotSpd };

/// Equal numbers of ER / BA / WS graphs (labels 0 / 1 / 2) with `nodes`
/// nodes each, embedded as requested. Degree embeddings carry a constant
/// placeholder channel on Lorentz(`dim`); the model owns the linear map.
Dataset make_synthetic_dataset(int per_class, int nodes, SyntheticEmbedding embedding,
                               std::uint64_t seed, int dim = 0);

/// Deformed icospheres, `per_class` of each class, weights normalised.
Dataset make_mesh_dataset(int per_class, int subdivisions, std::uint64_t seed);

}  // namespace mgcn
