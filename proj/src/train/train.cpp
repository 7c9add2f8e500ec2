#include "mgcn/train.hpp"

#include <algorithm>
#include <cmath>

#include "mgcn/errors.hpp"

namespace mgcn {

Vec fd_gradient(const std::function<double(const Vec&)>& loss, const Vec& x, double h) {
  if (!(h > 0.0)) throw ContractViolation("fd_gradient: step must be positive");
  Vec grad(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = loss(probe);
    probe(i) = x(i) - h;
    const double down = loss(probe);
    probe(i) = x(i);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error("fd_gradient: non-finite loss at coordinate " + std::to_string(i));
    }
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

AdamState AdamState::fresh(const Vec& params) {
  AdamState s;
  s.params = params;
  s.m = Vec::Zero(params.size());
  s.v = Vec::Zero(params.size());
  s.average = params;
  return s;
}

void adam_step(AdamState& s, const Vec& grad, const AdamOptions& o) {
  if (grad.size() != s.params.size() || s.m.size() != s.params.size()) {
    throw ContractViolation("adam_step: gradient and state sizes differ");
  }
  ++s.step;
  s.m = o.beta1 * s.m + (1.0 - o.beta1) * grad;
  s.v = o.beta2 * s.v + (1.0 - o.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(s.step));
  s.params.array() -= o.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + o.eps);
  if (o.averaging > 0.0) s.average += o.averaging * (s.params - s.average);
}

std::vector<int> labels_of(const Dataset& data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(s.graph.label());
  return out;
}

Split balanced_split(const std::vector<int>& labels, std::array<int, 3> ratios, std::uint64_t seed) {
  const int total_ratio = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] < 1 || ratios[1] < 0 || ratios[2] < 0) {
    throw ContractViolation("balanced_split: invalid ratios");
  }
  int classes = 0;
  for (int l : labels) {
    if (l < 0) throw ContractViolation("balanced_split: unlabelled sample");
    classes = std::max(classes, l + 1);
  }
  Rng rng(seed);
  Split split;
  for (int c = 0; c < classes; ++c) {
    std::vector<int> members;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const int n = static_cast<int>(members.size());
    const int n_val = static_cast<int>(std::lround(double(n) * ratios[1] / total_ratio));
    const int n_test = static_cast<int>(std::lround(double(n) * ratios[2] / total_ratio));
    const int n_train = std::max(0, n - n_val - n_test);
    split.train.insert(split.train.end(), members.begin(), members.begin() + n_train);
    split.validation.insert(split.validation.end(), members.begin() + n_train,
                            members.begin() + n_train + n_val);
    split.test.insert(split.test.end(), members.begin() + n_train + n_val, members.end());
  }
  for (auto* part : {&split.train, &split.validation, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

Metrics compute_metrics(const std::vector<int>& labels, const std::vector<int>& predicted,
                        int classes) {
  if (labels.size() != predicted.size() || labels.empty()) {
    throw ContractViolation("compute_metrics: need equally many non-zero labels and predictions");
  }
  Metrics m;
  m.confusion = Eigen::MatrixXi::Zero(classes, classes);
  int correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes || predicted[i] < 0 || predicted[i] >= classes) {
      throw ContractViolation("compute_metrics: class index out of range");
    }
    ++m.confusion(labels[i], predicted[i]);
    correct += labels[i] == predicted[i];
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  double f1_sum = 0.0;
  int counted = 0;
  for (int c = 0; c < classes; ++c) {
    const int tp = m.confusion(c, c);
    const int fn = m.confusion.row(c).sum() - tp;
    const int fp = m.confusion.col(c).sum() - tp;
    if (tp + fn + fp == 0) continue;
    f1_sum += 2.0 * tp / (2.0 * tp + fp + fn);
    ++counted;
  }
  m.macro_f1 = f1_sum / counted;
  return m;
}

namespace {

[[noreturn]] void rethrow_with_sample(const std::string& id) {
  try {
    throw;
  } catch (const CutLocusError& e) {
    throw CutLocusError("sample " + id + ": " + e.what(), e.from(), e.to(), e.channel());
  } catch (const NonConvergence& e) {
    throw NonConvergence("sample " + id + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw ContractViolation("sample " + id + ": " + e.what());
  }
}

int argmax(const Vec& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

}  // namespace

Metrics evaluate(const ModelParams& params, const Dataset& data, const std::vector<int>& indices) {
  std::vector<int> labels, predicted;
  for (int i : indices) {
    const Sample& s = data.at(static_cast<std::size_t>(i));
    try {
      predicted.push_back(argmax(forward(params, s.graph)));
    } catch (const Error&) {
      rethrow_with_sample(s.id);
    }
    labels.push_back(s.graph.label());
  }
  return compute_metrics(labels, predicted, params.descriptor().classes);
}

Metrics evaluate(const ModelParams& params, const Dataset& data) {
  std::vector<int> all(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) all[i] = static_cast<int>(i);
  return evaluate(params, data, all);
}

double mean_loss(const ModelParams& params, const Dataset& data, const std::vector<int>& indices) {
  if (indices.empty()) throw ContractViolation("mean_loss: no samples");
  double total = 0.0;
  for (int i : indices) {
    const Sample& s = data.at(static_cast<std::size_t>(i));
    try {
      total += sample_loss(params, s.graph);
    } catch (const Error&) {
      rethrow_with_sample(s.id);
    }
  }
  return total / static_cast<double>(indices.size());
}

Vec batch_gradient(const ModelParams& params, const Dataset& data, const std::vector<int>& indices,
                   GradientMethod method, double fd_step) {
  if (indices.empty()) throw ContractViolation("batch_gradient: empty batch");
  if (method == GradientMethod::FiniteDifference) {
    const ModelDescriptor& d = params.descriptor();
    return fd_gradient(
        [&](const Vec& x) { return mean_loss(ModelParams(d, x), data, indices); }, params.flat(),
        fd_step);
  }
  Vec grad = Vec::Zero(params.flat().size());
  for (int i : indices) {
    const Sample& s = data.at(static_cast<std::size_t>(i));
    try {
      grad += loss_gradient(params, s.graph).grad;
    } catch (const Error&) {
      rethrow_with_sample(s.id);
    }
  }
  return grad / static_cast<double>(indices.size());
}

namespace {

// Classes are shuffled separately and interleaved, so consecutive batches
// cycle through the classes.
std::vector<std::vector<int>> balanced_batches(const Dataset& data, const std::vector<int>& train,
                                               int batch_size, Rng& rng) {
  std::vector<std::vector<int>> by_class;
  for (int i : train) {
    const int label = data.at(static_cast<std::size_t>(i)).graph.label();
    if (label >= static_cast<int>(by_class.size())) by_class.resize(label + 1);
    by_class[label].push_back(i);
  }
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);
  std::vector<int> order;
  for (std::size_t k = 0; order.size() < train.size(); ++k) {
    for (const auto& members : by_class) {
      if (k < members.size()) order.push_back(members[k]);
    }
  }
  std::vector<std::vector<int>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    batches.emplace_back(order.begin() + i,
                         order.begin() + std::min(order.size(), i + static_cast<std::size_t>(batch_size)));
  }
  return batches;
}

}  // namespace

TrainResult train(const ModelParams& init, const Dataset& data, const Split& split,
                  const TrainOptions& options) {
  if (split.train.empty() || split.validation.empty()) {
    throw ContractViolation("train: training and validation splits must be non-empty");
  }
  if (options.epochs < 0 || options.batch_size < 1) {
    throw ContractViolation("train: need epochs >= 0 and batch size >= 1");
  }
  const ModelDescriptor& desc = init.descriptor();
  AdamState state = AdamState::fresh(init.flat());

  auto record = [&](int epoch, const ModelParams& current) {
    const ModelParams scored =
        options.select_average ? ModelParams(desc, state.average) : current;
    const Metrics val = evaluate(scored, data, split.validation);
    EpochRecord r{epoch, mean_loss(current, data, split.train), val.macro_f1, val.accuracy};
    if (options.on_epoch) options.on_epoch(r);
    return std::pair{r, scored};
  };

  TrainResult result{init, init, 0, 0.0, {}};
  {
    auto [r, scored] = record(0, init);
    result.history.push_back(r);
    result.best = scored;
    result.best_score = r.validation_f1;
  }
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(epoch)));
    for (const auto& batch : balanced_batches(data, split.train, options.batch_size, rng)) {
      const ModelParams current(desc, state.params);
      adam_step(state, batch_gradient(current, data, batch, options.gradient, options.fd_step),
                options.adam);
      ModelParams projected(desc, state.params);
      projected.project();
      state.params = projected.flat();
    }
    auto [r, scored] = record(epoch, ModelParams(desc, state.params));
    result.history.push_back(r);
    const bool better = options.selection == SelectionRule::LastBest
                            ? r.validation_f1 >= result.best_score
                            : r.validation_f1 > result.best_score;
    if (better) {
      result.best = scored;
      result.best_score = r.validation_f1;
      result.best_epoch = epoch;
    }
  }
  result.last = ModelParams(desc, state.params);
  return result;
}

}  // namespace mgcn
