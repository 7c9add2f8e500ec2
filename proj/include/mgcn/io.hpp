#pragma once
// File formats: graph JSON (schema v1), dataset manifests, checkpoints,
// training history CSV and trajectory JSON lines.
#include <string>
#include <vector>

#include "mgcn/datagen.hpp"
#include "mgcn/dynamics.hpp"
#include "mgcn/model.hpp"
#include "mgcn/train.hpp"

namespace mgcn {

inline constexpr int kGraphSchemaVersion = 1;
inline constexpr int kManifestVersion = 1;
inline constexpr int kCheckpointVersion = 1;

/// Graph schema v1:
///   {"version": 1, "manifold": {"kind": "sphere", "dim": 2}, "nodes": n,
///    "edges": [[from, to, weight], ...], "channels": [[point, ...], ...],
///    "label": int?, "covariates": [real, ...]?}
/// Points are flat coordinate arrays (SPD matrices row-major). Doubles are
/// written in shortest round-trip decimal form, so reading back is exact.
std::string graph_to_json(const FeatureGraph& g, int indent = -1);
/// Throws SchemaError naming the JSON path of the first violation.
FeatureGraph graph_from_json(const std::string& text);
FeatureGraph read_graph(const std::string& path);
void write_graph(const FeatureGraph& g, const std::string& path);

/// Writes `<dir>/<id>.json` per sample plus `<dir>/manifest.json`.
void write_dataset(const Dataset& data, const std::string& dir, const std::string& description);
/// Reads a manifest and the graph files it lists (paths relative to it).
Dataset read_dataset(const std::string& manifest_path);

std::string descriptor_to_json(const ModelDescriptor& d);
ModelDescriptor descriptor_from_json(const std::string& text);

struct Checkpoint {
  ModelParams params{ModelDescriptor{}};
  std::uint64_t seed = 0;
  int epoch = 0;
  double validation_score = 0.0;
};

void write_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

/// epoch,train_loss,validation_f1,validation_accuracy
std::string history_csv(const std::vector<EpochRecord>& history);

/// One line per snapshot: {"t": time, "coords": [flat coordinates]}.
/// Feature matrices are flattened node by node.
std::string trajectory_jsonl(const Trajectory& traj);
/// Times and flattened snapshots of a JSON-lines trajectory.
Trajectory parse_trajectory_jsonl(const std::string& text, int ambient_dim);

/// Writes via a temporary file in the same directory and renames it.
void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace mgcn
