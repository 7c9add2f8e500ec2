#include "mgcn/mgcn.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "mgcn/datagen.hpp"
#include "mgcn/dynamics.hpp"
#include "mgcn/errors.hpp"
#include "mgcn/io.hpp"
#include "mgcn/model.hpp"
#include "mgcn/train.hpp"
#include "mgcn/verify.hpp"

struct mgcn_graph {
  mgcn::FeatureGraph graph;
};

struct mgcn_dataset {
  mgcn::Dataset data;
};

struct mgcn_model {
  mgcn::Checkpoint state;
};

namespace {

using json = nlohmann::ordered_json;

thread_local std::string last_error;

mgcn_status fail(mgcn_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

/// Runs `fn`, translating exceptions into status codes.
template <class F>
mgcn_status guarded(F&& fn) {
  try {
    fn();
    last_error.clear();
    return MGCN_OK;
  } catch (const mgcn::CutLocusError& e) {
    return fail(MGCN_ERR_CUT_LOCUS, e.what());
  } catch (const mgcn::NonConvergence& e) {
    return fail(MGCN_ERR_NONCONVERGENCE, e.what());
  } catch (const mgcn::SchemaError& e) {
    return fail(MGCN_ERR_SCHEMA, e.what());
  } catch (const mgcn::IoError& e) {
    return fail(MGCN_ERR_IO, e.what());
  } catch (const mgcn::ContractViolation& e) {
    return fail(MGCN_ERR_CONTRACT, e.what());
  } catch (const json::exception& e) {
    return fail(MGCN_ERR_SCHEMA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MGCN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MGCN_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw mgcn::ContractViolation(std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

mgcn::ModelDescriptor parse_descriptor(const char* text) {
  require(text, "descriptor");
  json merged = json::parse(mgcn::descriptor_to_json(mgcn::ModelDescriptor{}));
  const json user = json::parse(text);
  if (!user.is_object()) throw mgcn::SchemaError("", "descriptor must be a JSON object");
  for (const auto& [key, value] : user.items()) {
    if (!merged.contains(key)) throw mgcn::SchemaError("/" + key, "unknown descriptor field");
    merged[key] = value;
  }
  return mgcn::descriptor_from_json(merged.dump());
}

json metrics_json(const mgcn::Metrics& m) {
  json confusion = json::array();
  for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) row.push_back(m.confusion(r, c));
    confusion.push_back(row);
  }
  return {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"confusion", confusion}};
}

std::array<int, 3> ratio_array(const int ratios[3]) {
  if (ratios == nullptr) return {4, 1, 1};
  return {ratios[0], ratios[1], ratios[2]};
}

std::uint64_t split_seed(std::uint64_t seed) { return mgcn::derive_seed(seed, 1); }
std::uint64_t batch_seed(std::uint64_t seed) { return mgcn::derive_seed(seed, 2); }

json ids(const mgcn::Dataset& data, const std::vector<int>& idx) {
  json out = json::array();
  for (int i : idx) out.push_back(data[static_cast<std::size_t>(i)].id);
  return out;
}

}  // namespace

extern "C" {

const char* mgcn_version(void) { return "1.0.0"; }

const char* mgcn_last_error(void) { return last_error.c_str(); }

const char* mgcn_status_name(mgcn_status status) {
  switch (status) {
    case MGCN_OK: return "ok";
    case MGCN_ERR_CONTRACT: return "contract violation";
    case MGCN_ERR_SCHEMA: return "schema error";
    case MGCN_ERR_IO: return "i/o error";
    case MGCN_ERR_CUT_LOCUS: return "cut locus";
    case MGCN_ERR_NONCONVERGENCE: return "non-convergence";
    case MGCN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void mgcn_string_free(char* s) { std::free(s); }

// ---- graphs ----

mgcn_status mgcn_graph_read(const char* path, mgcn_graph** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new mgcn_graph{mgcn::read_graph(path)};
  });
}

mgcn_status mgcn_graph_from_json(const char* text, mgcn_graph** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new mgcn_graph{mgcn::graph_from_json(text)};
  });
}

mgcn_status mgcn_graph_write(const mgcn_graph* g, const char* path) {
  return guarded([&] {
    require(g, "graph");
    require(path, "path");
    mgcn::write_graph(g->graph, path);
  });
}

mgcn_status mgcn_graph_to_json(const mgcn_graph* g, char** out) {
  return guarded([&] {
    require(g, "graph");
    require(out, "out");
    *out = dup(mgcn::graph_to_json(g->graph));
  });
}

mgcn_status mgcn_graph_info(const mgcn_graph* g, int* nodes, int* edges, int* channels,
                            int* ambient_dim) {
  return guarded([&] {
    require(g, "graph");
    if (nodes) *nodes = g->graph.node_count();
    if (edges) *edges = static_cast<int>(g->graph.graph().edge_count());
    if (channels) *channels = g->graph.channel_count();
    if (ambient_dim) *ambient_dim = g->graph.kind().ambient_dim();
  });
}

void mgcn_graph_free(mgcn_graph* g) { delete g; }

mgcn_status mgcn_diffuse(const mgcn_graph* g, int channel, double T, double dt, int record_every,
                         const char* path) {
  return guarded([&] {
    require(g, "graph");
    require(path, "path");
    if (channel < 0 || channel >= g->graph.channel_count()) {
      throw mgcn::ContractViolation("channel " + std::to_string(channel) + " out of range");
    }
    if (!(dt > 0.0) || !(T >= 0.0)) throw mgcn::ContractViolation("need dt > 0 and T >= 0");
    if (record_every < 1) throw mgcn::ContractViolation("record_every must be at least 1");
    mgcn::IntegrateOptions opts;
    opts.record_every = record_every;
    const mgcn::Trajectory traj = mgcn::integrate(g->graph, channel, T, dt, opts);
    mgcn::write_text_atomic(path, mgcn::trajectory_jsonl(traj));
  });
}

// ---- datasets ----

mgcn_status mgcn_dataset_synthetic(int per_class, int nodes, const char* embedding, uint64_t seed,
                                   int dim, mgcn_dataset** out) {
  return guarded([&] {
    require(embedding, "embedding");
    require(out, "out");
    const std::string e = embedding;
    mgcn::SyntheticEmbedding kind;
    if (e == "onehot-lorentz") kind = mgcn::SyntheticEmbedding::OneHotLorentz;
    else if (e == "degree-lorentz") kind = mgcn::SyntheticEmbedding::DegreeLorentz;
    else if (e == "onehot-spd") kind = mgcn::SyntheticEmbedding::OneHotSpd;
    else throw mgcn::ContractViolation("unknown embedding '" + e + "'");
    if (per_class < 1) throw mgcn::ContractViolation("per_class must be positive");
    *out = new mgcn_dataset{mgcn::make_synthetic_dataset(per_class, nodes, kind, seed, dim)};
  });
}

mgcn_status mgcn_dataset_mesh(int per_class, int subdivisions, uint64_t seed, mgcn_dataset** out) {
  return guarded([&] {
    require(out, "out");
    if (per_class < 1) throw mgcn::ContractViolation("per_class must be positive");
    if (subdivisions < 0 || subdivisions > 6) {
      throw mgcn::ContractViolation("subdivisions must be between 0 and 6");
    }
    *out = new mgcn_dataset{mgcn::make_mesh_dataset(per_class, subdivisions, seed)};
  });
}

mgcn_status mgcn_dataset_write(const mgcn_dataset* d, const char* dir, const char* description) {
  return guarded([&] {
    require(d, "dataset");
    require(dir, "dir");
    mgcn::write_dataset(d->data, dir, description ? description : "");
  });
}

mgcn_status mgcn_dataset_read(const char* manifest_path, mgcn_dataset** out) {
  return guarded([&] {
    require(manifest_path, "manifest path");
    require(out, "out");
    *out = new mgcn_dataset{mgcn::read_dataset(manifest_path)};
  });
}

mgcn_status mgcn_dataset_size(const mgcn_dataset* d, int* size) {
  return guarded([&] {
    require(d, "dataset");
    require(size, "size");
    *size = static_cast<int>(d->data.size());
  });
}

mgcn_status mgcn_dataset_summary(const mgcn_dataset* d, char** out) {
  return guarded([&] {
    require(d, "dataset");
    require(out, "out");
    if (d->data.empty()) throw mgcn::ContractViolation("dataset is empty");
    const mgcn::FeatureGraph& first = d->data.front().graph;
    int classes = 0, max_nodes = 0, max_degree = 0;
    for (const mgcn::Sample& s : d->data) {
      classes = std::max(classes, s.graph.label() + 1);
      max_nodes = std::max(max_nodes, s.graph.node_count());
      for (int v = 0; v < s.graph.node_count(); ++v) {
        max_degree = std::max(max_degree, s.graph.graph().out_degree(v));
      }
    }
    const json j = {{"samples", d->data.size()},
                    {"manifold", {{"kind", first.kind().name()}, {"dim", first.kind().dim}}},
                    {"channels", first.channel_count()},
                    {"classes", classes},
                    {"covariates", first.covariates().size()},
                    {"max_nodes", max_nodes},
                    {"max_degree", max_degree}};
    *out = dup(j.dump());
  });
}

void mgcn_dataset_free(mgcn_dataset* d) { delete d; }

// ---- models ----

mgcn_status mgcn_model_create(const char* descriptor_json, uint64_t seed, mgcn_model** out) {
  return guarded([&] {
    require(out, "out");
    const mgcn::ModelDescriptor d = parse_descriptor(descriptor_json);
    mgcn::Rng rng(seed);
    auto* m = new mgcn_model;
    m->state.params = mgcn::ModelParams::init(d, rng);
    m->state.seed = seed;
    *out = m;
  });
}

mgcn_status mgcn_model_load(const char* checkpoint_path, mgcn_model** out) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint path");
    require(out, "out");
    *out = new mgcn_model{mgcn::read_checkpoint(checkpoint_path)};
  });
}

mgcn_status mgcn_model_save(const mgcn_model* m, const char* checkpoint_path) {
  return guarded([&] {
    require(m, "model");
    require(checkpoint_path, "checkpoint path");
    mgcn::write_checkpoint(m->state, checkpoint_path);
  });
}

mgcn_status mgcn_model_descriptor(const mgcn_model* m, char** out) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    *out = dup(mgcn::descriptor_to_json(m->state.params.descriptor()));
  });
}

mgcn_status mgcn_model_param_count(const mgcn_model* m, int64_t* count) {
  return guarded([&] {
    require(m, "model");
    require(count, "count");
    *count = m->state.params.flat().size();
  });
}

mgcn_status mgcn_model_training_info(const mgcn_model* m, uint64_t* seed, int* epoch,
                                     double* validation_score) {
  return guarded([&] {
    require(m, "model");
    if (seed) *seed = m->state.seed;
    if (epoch) *epoch = m->state.epoch;
    if (validation_score) *validation_score = m->state.validation_score;
  });
}

mgcn_status mgcn_model_forward(const mgcn_model* m, const mgcn_graph* g, double* log_probs,
                               int capacity) {
  return guarded([&] {
    require(m, "model");
    require(g, "graph");
    require(log_probs, "log_probs");
    const Eigen::VectorXd lp = mgcn::forward(m->state.params, g->graph);
    if (capacity < lp.size()) {
      throw mgcn::ContractViolation("output buffer holds " + std::to_string(capacity) +
                                    " values, model has " + std::to_string(lp.size()) + " classes");
    }
    for (Eigen::Index i = 0; i < lp.size(); ++i) log_probs[i] = lp(i);
  });
}

void mgcn_model_free(mgcn_model* m) { delete m; }

mgcn_status mgcn_count_params(const char* descriptor_json, char** out) {
  return guarded([&] {
    require(out, "out");
    const mgcn::ParamCount pc = mgcn::count_params(parse_descriptor(descriptor_json));
    json breakdown = json::array();
    for (const auto& [name, count] : pc.breakdown) {
      breakdown.push_back({{"component", name}, {"count", count}});
    }
    *out = dup(json{{"total", pc.total}, {"breakdown", breakdown}}.dump());
  });
}

// ---- training ----

void mgcn_train_options_default(mgcn_train_options* options) {
  if (options == nullptr) return;
  *options = mgcn_train_options{};
  options->epochs = 60;
  options->batch_size = 3;
  options->lr = 1e-3;
  options->seed = 0;
  options->ratios[0] = 4;
  options->ratios[1] = 1;
  options->ratios[2] = 1;
  options->first_best = 0;
  options->finite_differences = 0;
  options->averaging = 0.0;
  options->history_csv_path = nullptr;
  options->verbose = 0;
}

mgcn_status mgcn_train(mgcn_model* model, const mgcn_dataset* data, const mgcn_train_options* options,
                       char** report) {
  return guarded([&] {
    require(model, "model");
    require(data, "dataset");
    require(options, "options");
    if (!(options->lr > 0.0)) throw mgcn::ContractViolation("learning rate must be positive");
    if (options->averaging < 0.0 || options->averaging > 1.0) {
      throw mgcn::ContractViolation("averaging must be in [0, 1]");
    }
    const mgcn::Split split = mgcn::balanced_split(mgcn::labels_of(data->data),
                                                   ratio_array(options->ratios),
                                                   split_seed(options->seed));
    mgcn::TrainOptions opts;
    opts.epochs = options->epochs;
    opts.batch_size = options->batch_size;
    opts.adam.lr = options->lr;
    opts.adam.averaging = options->averaging;
    opts.select_average = options->averaging > 0.0;
    opts.seed = batch_seed(options->seed);
    opts.gradient = options->finite_differences ? mgcn::GradientMethod::FiniteDifference
                                                : mgcn::GradientMethod::Reverse;
    opts.selection = options->first_best ? mgcn::SelectionRule::FirstBest
                                         : mgcn::SelectionRule::LastBest;
    if (options->verbose) {
      opts.on_epoch = [](const mgcn::EpochRecord& r) {
        std::fprintf(stderr, "epoch %3d  train loss %.6f  validation F1 %.4f  accuracy %.4f\n",
                     r.epoch, r.train_loss, r.validation_f1, r.validation_accuracy);
      };
    }
    const mgcn::TrainResult res = mgcn::train(model->state.params, data->data, split, opts);
    if (options->history_csv_path != nullptr) {
      mgcn::write_text_atomic(options->history_csv_path, mgcn::history_csv(res.history));
    }
    const mgcn::Metrics test = split.test.empty() ? mgcn::Metrics{}
                                                  : mgcn::evaluate(res.best, data->data, split.test);
    model->state.params = res.best;
    model->state.seed = options->seed;
    model->state.epoch = res.best_epoch;
    model->state.validation_score = res.best_score;
    if (report != nullptr) {
      json history = json::array();
      for (const mgcn::EpochRecord& r : res.history) {
        history.push_back({{"epoch", r.epoch},
                           {"train_loss", r.train_loss},
                           {"validation_f1", r.validation_f1},
                           {"validation_accuracy", r.validation_accuracy}});
      }
      const json j = {{"seed", options->seed},
                      {"best_epoch", res.best_epoch},
                      {"best_validation_f1", res.best_score},
                      {"test", metrics_json(test)},
                      {"split",
                       {{"train", ids(data->data, split.train)},
                        {"validation", ids(data->data, split.validation)},
                        {"test", ids(data->data, split.test)}}},
                      {"history", history}};
      *report = dup(j.dump(2));
    }
  });
}

mgcn_status mgcn_evaluate(const mgcn_model* model, const mgcn_dataset* data, const char* part,
                          uint64_t seed, const int ratios[3], char** report) {
  return guarded([&] {
    require(model, "model");
    require(data, "dataset");
    require(report, "report");
    const std::string which = part ? part : "all";
    std::vector<int> idx;
    if (which == "all") {
      idx.resize(data->data.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    } else {
      const mgcn::Split split =
          mgcn::balanced_split(mgcn::labels_of(data->data), ratio_array(ratios), split_seed(seed));
      if (which == "train") idx = split.train;
      else if (which == "validation") idx = split.validation;
      else if (which == "test") idx = split.test;
      else throw mgcn::ContractViolation("unknown part '" + which + "'");
    }
    if (idx.empty()) throw mgcn::ContractViolation("no samples to evaluate");
    json j = metrics_json(mgcn::evaluate(model->state.params, data->data, idx));
    j["part"] = which;
    j["samples"] = idx.size();
    j["mean_loss"] = mgcn::mean_loss(model->state.params, data->data, idx);
    *report = dup(j.dump(2));
  });
}

// ---- verification ----

mgcn_status mgcn_verify(const char* suite, uint64_t seed, int learning_seeds, int learning_epochs,
                        int verbose, char** report, int* passed) {
  return guarded([&] {
    require(suite, "suite");
    mgcn::VerifyOptions opts;
    opts.seed = seed;
    if (learning_seeds > 0) opts.learning_seeds = learning_seeds;
    if (learning_epochs > 0) opts.learning_epochs = learning_epochs;
    if (verbose) opts.log = [](const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); };
    std::vector<int> criteria;
    if (std::string(suite) == "all") {
      for (int c = 1; c <= 11; ++c) criteria.push_back(c);
    } else {
      criteria.push_back(mgcn::suite_criterion(suite));
    }
    std::vector<mgcn::SuiteResult> results;
    bool ok = true;
    for (int c : criteria) {
      results.push_back(mgcn::run_suite(c, opts));
      ok = ok && results.back().passed;
      if (verbose) std::fprintf(stderr, "%s\n", mgcn::summary_line(results.back()).c_str());
    }
    if (passed) *passed = ok ? 1 : 0;
    if (report) *report = dup(mgcn::report_json(results, seed));
  });
}

const char* mgcn_verify_suites(void) {
  static const std::string names = [] {
    std::string s;
    for (const std::string& n : mgcn::suite_names()) s += (s.empty() ? "" : ",") + n;
    return s;
  }();
  return names.c_str();
}

}  // extern "C"
