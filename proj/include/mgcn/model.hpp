#pragma once

#include <string>
#include <vector>

#include "mgcn/layers.hpp"

namespace mgcn {

/// Architecture of a manifold GCN classifier:
///   [degree embedding] -> (diffusion(c_k) -> tMLP(c_k -> c_{k+1}))_k
///   -> invariant layer -> max/mean pooling (+ covariates) -> 2-layer MLP -> log-softmax
struct ModelDescriptor {
  ManifoldKind kind = ManifoldKind::sphere(2);
  /// widths[k] is the channel count of diffusion layer k; the tMLP after it
  /// maps to widths[k+1]. The last entry is the invariant layer's width.
  std::vector<int> widths{5, 8, 8};
  int steps = 1;
  int hidden = 3;
  int classes = 3;
  int covariates = 0;
  TmlpMode tmlp_mode = TmlpMode::Signed;
  double slope = 0.01;
  InvariantMode invariant_mode = InvariantMode::Difference;
  int reference_channel = 0;
  /// When > 0 (Lorentz only), node features are exp_o(A e_deg) with a
  /// trainable d x degree_inputs matrix A and deg the node's out-degree.
  int degree_inputs = 0;

  int blocks() const { return static_cast<int>(widths.size()) - 1; }
  int pooled_width() const;
  /// Throws ContractViolation when the descriptor is inconsistent.
  void validate() const;

  friend bool operator==(const ModelDescriptor&, const ModelDescriptor&) = default;
};

/// Named slice of the flat parameter vector.
struct ParamSlice {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
};

/// Stable parameter layout of a descriptor.
std::vector<ParamSlice> param_layout(const ModelDescriptor& d);

struct ParamCount {
  long long total = 0;
  /// (component name, count) in layout order.
  std::vector<std::pair<std::string, long long>> breakdown;
};

ParamCount count_params(const ModelDescriptor& d);

/// Full learnable state: a descriptor and its flat parameter vector.
class ModelParams {
 public:
  explicit ModelParams(ModelDescriptor d);
  ModelParams(ModelDescriptor d, Vec flat);

  static ModelParams init(const ModelDescriptor& d, Rng& rng);

  const ModelDescriptor& descriptor() const { return desc_; }
  const Vec& flat() const { return flat_; }
  Vec& flat() { return flat_; }
  const std::vector<ParamSlice>& layout() const { return layout_; }
  const ParamSlice& slice(const std::string& name) const;

  DiffusionParams diffusion(int block) const;
  TmlpLayerParams tmlp(int block) const;
  InvariantParams invariant() const;
  HeadParams head() const;
  Mat embedding() const;

  /// Clamps diffusion times and thresholds to be non-negative.
  void project();

 private:
  Mat matrix(const std::string& name) const;

  ModelDescriptor desc_;
  std::vector<ParamSlice> layout_;
  Vec flat_;
};

Vec flatten(const ModelParams& p);
ModelParams unflatten(const Vec& flat, const ModelDescriptor& d);

/// Node features fed to the first diffusion layer.
Channels model_inputs(const ModelParams& params, const FeatureGraph& g);

struct ForwardTrace {
  Channels block_output;
  Mat invariant;
  Vec pooled;
  Vec log_probs;
};

ForwardTrace forward_trace(const ModelParams& params, const FeatureGraph& g);
Vec forward(const ModelParams& params, const FeatureGraph& g);
double sample_loss(const ModelParams& params, const FeatureGraph& g);

struct LossGradient {
  double loss = 0.0;
  Vec grad;
  Vec log_probs;
};

/// Loss of one labelled sample and its gradient with respect to the flat
/// parameters, by reverse-mode differentiation of the forward pass.
LossGradient loss_gradient(const ModelParams& params, const FeatureGraph& g);

}  // namespace mgcn
