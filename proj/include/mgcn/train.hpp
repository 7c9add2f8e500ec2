#pragma once
// Finite-difference gradients, ADAM, balanced splits, the training loop and
// classification metrics.
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "mgcn/datagen.hpp"
#include "mgcn/model.hpp"

namespace mgcn {

/// Central differences (L(x + h e_i) - L(x - h e_i)) / 2h for every i.
/// Throws Error when a loss evaluation is not finite.
Vec fd_gradient(const std::function<double(const Vec&)>& loss, const Vec& x, double h = 1e-6);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Step size of the running parameter average; 0 disables it.
  double averaging = 0.0;
};

struct AdamState {
  Vec params;
  Vec m;
  Vec v;
  long long step = 0;
  /// Running average of the parameters (only maintained when enabled).
  Vec average;

  static AdamState fresh(const Vec& params);
};

/// One bias-corrected ADAM update of state.params.
void adam_step(AdamState& state, const Vec& grad, const AdamOptions& options = {});

struct Split {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

/// Stratified split with the given ratios: every class is shuffled and cut
/// separately, so each part holds each class within one sample of its share.
Split balanced_split(const std::vector<int>& labels, std::array<int, 3> ratios, std::uint64_t seed);
std::vector<int> labels_of(const Dataset& data);

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  /// confusion(true, predicted)
  Eigen::MatrixXi confusion;
};

/// Macro-F1 averages per-class F1 over classes that occur among the labels or
/// the predictions.
Metrics compute_metrics(const std::vector<int>& labels, const std::vector<int>& predicted,
                        int classes);
Metrics evaluate(const ModelParams& params, const Dataset& data, const std::vector<int>& indices);
Metrics evaluate(const ModelParams& params, const Dataset& data);

enum class GradientMethod { Reverse, FiniteDifference };
enum class SelectionRule { LastBest, FirstBest };

struct TrainOptions {
  int epochs = 60;
  int batch_size = 3;
  AdamOptions adam;
  std::uint64_t seed = 0;
  GradientMethod gradient = GradientMethod::Reverse;
  double fd_step = 1e-6;
  SelectionRule selection = SelectionRule::LastBest;
  /// Use the running parameter average for validation and selection.
  bool select_average = false;
  /// Called after each epoch; may be empty.
  std::function<void(const struct EpochRecord&)> on_epoch;
};

struct EpochRecord {
  int epoch = 0;
  /// Mean loss over the training split after the epoch (before any update
  /// for epoch 0).
  double train_loss = 0.0;
  double validation_f1 = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainResult {
  ModelParams best;
  /// Parameters after the final epoch.
  ModelParams last;
  int best_epoch = 0;
  double best_score = 0.0;
  /// Entry 0 describes the initial parameters.
  std::vector<EpochRecord> history;
};

double mean_loss(const ModelParams& params, const Dataset& data, const std::vector<int>& indices);

/// Gradient of the mean loss over `indices`.
Vec batch_gradient(const ModelParams& params, const Dataset& data, const std::vector<int>& indices,
                   GradientMethod method, double fd_step = 1e-6);

/// Mini-batch ADAM on the training split with balanced batches, model
/// selection on validation macro-F1. Deterministic in options.seed. Errors in
/// a sample are rethrown with its id.
TrainResult train(const ModelParams& init, const Dataset& data, const Split& split,
                  const TrainOptions& options);

}  // namespace mgcn
