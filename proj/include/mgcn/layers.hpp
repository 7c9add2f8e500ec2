#pragma once

#include <vector>

#include "mgcn/graph.hpp"

namespace mgcn {

/// Channel features: one (ambient dim) x (node count) matrix per channel.
using Channels = std::vector<Mat>;

/// sigma_p^alpha(X) = X if |X|_p >= alpha, else 0.
Vec activate(const Manifold& m, const Vec& p, const Vec& x, double alpha);

/// One activated explicit diffusion step: f(v) <- exp_{f(v)}(-t sigma^alpha(Delta f(v))).
Mat step_map(const Manifold& m, const Graph& g, const Mat& f, double t, double alpha,
             int channel = -1);

/// `steps` successive step maps. A CutLocusError names the failing step.
Mat l_step_map(const Manifold& m, const Graph& g, const Mat& f, double t, double alpha, int steps,
               int channel = -1);

struct DiffusionParams {
  Vec t;
  Vec alpha;
  int steps = 1;

  int channels() const { return static_cast<int>(t.size()); }
  /// Throws ContractViolation on bad shapes or parameters.
  void validate() const;
};

Channels diffusion_layer(const Manifold& m, const Graph& g, const Channels& in,
                         const DiffusionParams& params);

/// How the tMLP nonlinearity acts on the component of X along Y.
enum class TmlpMode {
  /// sigma applied to the signed coefficient s = <X, Y>.
  Signed,
  /// sigma applied to |s| as written (identity for ReLU-type sigma).
  Norm,
};

struct TmlpLayerParams {
  Mat omega;  // c_out x c_in
  Mat xi;     // c_out x c_in

  int in_channels() const { return static_cast<int>(omega.cols()); }
  int out_channels() const { return static_cast<int>(omega.rows()); }
};

struct TmlpOptions {
  TmlpMode mode = TmlpMode::Signed;
  /// Leaky ReLU slope; 1 makes sigma the identity.
  double slope = 0.01;
};

inline constexpr double kDegenerateDirection = 1e-12;

double leaky_relu(double x, double slope);

/// One tangent linear layer applied at node-wise reference points `ref`,
/// acting on tangent vectors (columns) in `logs`. Returns the vectors Z_j.
std::vector<Mat> tmlp_tangent_layer(const Manifold& m, const Mat& ref, const std::vector<Mat>& logs,
                                    const TmlpLayerParams& params, const TmlpOptions& options = {});

/// One tMLP layer with explicit reference points: logs at ref, tangent layer,
/// exp back.
Channels tmlp_layer(const Manifold& m, const Channels& in, const Mat& ref,
                    const TmlpLayerParams& params, const TmlpOptions& options = {});

/// One tMLP layer using channel `reference_channel` of the input as reference.
Channels tmlp_layer(const Manifold& m, const Channels& in, const TmlpLayerParams& params,
                    int reference_channel = 0, const TmlpOptions& options = {});

/// Several tMLP layers sharing the reference of the first layer's input.
/// With `cancel` the intermediate exp/log pairs are skipped.
Channels tmlp(const Manifold& m, const Channels& in, const std::vector<TmlpLayerParams>& layers,
              int reference_channel = 0, const TmlpOptions& options = {}, bool cancel = true);

enum class InvariantMode {
  /// s_j = d(f_j, mu_j1) - d(f_j, mu_j2)
  Difference,
  /// both distances as separate outputs (2c rows)
  Pair,
};

struct InvariantParams {
  Mat logits1;  // c x c; row j gives the weights of mean mu_j1
  Mat logits2;

  int channels() const { return static_cast<int>(logits1.rows()); }
};

Vec softmax(const Vec& logits);

/// Scalars per node: rows are output channels, columns nodes.
Mat invariant_layer(const Manifold& m, const Channels& in, const InvariantParams& params,
                    InvariantMode mode = InvariantMode::Difference);

/// Per-row max followed by per-row mean.
Vec pool(const Mat& scalars);

struct HeadParams {
  Mat w1;  // hidden x in
  Vec b1;
  Mat w2;  // classes x hidden
  Vec b2;
  double slope = 0.01;
};

Vec log_softmax(const Vec& logits);

/// Two dense layers with leaky ReLU between, then log-softmax. The covariates
/// are appended to `pooled`.
Vec head(const Vec& pooled, const Vec& covariates, const HeadParams& params);

double cross_entropy(const Vec& log_probs, int label);

}  // namespace mgcn
