// Command-line front end. Talks to the library only through the C interface.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgcn/mgcn.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNumerical = 2;

/// Thrown on a failed library call; carries the CLI exit code.
struct Failure {
  int code;
  std::string message;
};

void check(mgcn_status s, const std::string& context) {
  if (s == MGCN_OK) return;
  const int code =
      (s == MGCN_ERR_CUT_LOCUS || s == MGCN_ERR_NONCONVERGENCE) ? kExitNumerical : kExitInvalid;
  throw Failure{code, context + ": " + mgcn_status_name(s) + ": " + mgcn_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mgcn_string_free(s);
  return out;
}

void write_atomic(const std::string& path, const std::string& text) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Failure{kExitInvalid, "cannot write " + tmp.string()};
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Failure{kExitInvalid, "cannot rename to " + path + ": " + ec.message()};
}

/// Writes to `path`, or to stdout when `path` is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_atomic(path, text.back() == '\n' ? text : text + "\n");
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using GraphPtr = std::unique_ptr<mgcn_graph, Deleter<mgcn_graph, mgcn_graph_free>>;
using DatasetPtr = std::unique_ptr<mgcn_dataset, Deleter<mgcn_dataset, mgcn_dataset_free>>;
using ModelPtr = std::unique_ptr<mgcn_model, Deleter<mgcn_model, mgcn_model_free>>;

DatasetPtr load_dataset(const std::string& path) {
  std::string manifest = path;
  if (fs::is_directory(path)) manifest = (fs::path(path) / "manifest.json").string();
  mgcn_dataset* d = nullptr;
  check(mgcn_dataset_read(manifest.c_str(), &d), "reading " + manifest);
  return DatasetPtr(d);
}

// ---- gen-data ----

struct GenData {
  std::string kind = "synthetic";
  std::string out;
  std::uint64_t seed = 0;
  int per_class = 100;
  int nodes = 100;
  std::string embedding = "onehot-lorentz";
  int dim = 0;
  int subdivisions = 3;
  std::string description;
};

int run_gen_data(const GenData& o) {
  mgcn_dataset* raw = nullptr;
  if (o.kind == "synthetic") {
    int dim = o.dim;
    if (dim == 0 && o.embedding == "degree-lorentz") dim = o.nodes;
    check(mgcn_dataset_synthetic(o.per_class, o.nodes, o.embedding.c_str(), o.seed, dim, &raw),
          "generating synthetic graphs");
  } else {
    check(mgcn_dataset_mesh(o.per_class, o.subdivisions, o.seed, &raw), "generating meshes");
  }
  DatasetPtr data(raw);
  std::string description = o.description;
  if (description.empty()) {
    std::ostringstream s;
    s << o.kind;
    if (o.kind == "synthetic") s << " " << o.embedding << " nodes=" << o.nodes;
    else s << " subdivisions=" << o.subdivisions;
    s << " per_class=" << o.per_class << " seed=" << o.seed;
    description = s.str();
  }
  fs::create_directories(o.out);
  check(mgcn_dataset_write(data.get(), o.out.c_str(), description.c_str()), "writing " + o.out);
  char* summary = nullptr;
  check(mgcn_dataset_summary(data.get(), &summary), "summarizing dataset");
  std::cout << take(summary) << "\n";
  return kExitOk;
}

// ---- train ----

struct Train {
  std::string data;
  std::uint64_t seed = 0;
  std::string out;
  std::string history;
  std::string report;
  int epochs = 60;
  int batch_size = 3;
  double lr = 1e-3;
  std::vector<int> widths;
  int hidden = 3;
  int steps = 1;
  std::string invariant = "difference";
  std::string tmlp = "signed";
  bool degree_embedding = false;
  std::vector<int> ratios{4, 1, 1};
  std::string selection = "last";
  double averaging = 0.0;
  bool finite_differences = false;
  bool verbose = false;
};

int run_train(const Train& o) {
  DatasetPtr data = load_dataset(o.data);
  char* summary_raw = nullptr;
  check(mgcn_dataset_summary(data.get(), &summary_raw), "summarizing dataset");
  const json summary = json::parse(take(summary_raw));

  std::vector<int> widths = o.widths;
  if (widths.empty()) {
    widths = {5, 8, 8};
    const int channels = summary["channels"].get<int>();
    if (channels > 1 && !o.degree_embedding) widths.front() = channels;
  }
  json descriptor = {{"manifold", summary["manifold"]},
                     {"widths", widths},
                     {"steps", o.steps},
                     {"hidden", o.hidden},
                     {"classes", summary["classes"]},
                     {"covariates", summary["covariates"]},
                     {"tmlp_mode", o.tmlp},
                     {"invariant_mode", o.invariant},
                     {"degree_inputs",
                      o.degree_embedding ? summary["max_degree"].get<int>() + 1 : 0}};
  mgcn_model* raw = nullptr;
  check(mgcn_model_create(descriptor.dump().c_str(), o.seed, &raw), "creating model");
  ModelPtr model(raw);

  mgcn_train_options opts;
  mgcn_train_options_default(&opts);
  opts.epochs = o.epochs;
  opts.batch_size = o.batch_size;
  opts.lr = o.lr;
  opts.seed = o.seed;
  for (int i = 0; i < 3; ++i) opts.ratios[i] = o.ratios[static_cast<std::size_t>(i)];
  opts.first_best = o.selection == "first";
  opts.finite_differences = o.finite_differences;
  opts.averaging = o.averaging;
  opts.history_csv_path = o.history.empty() ? nullptr : o.history.c_str();
  opts.verbose = o.verbose;

  char* report_raw = nullptr;
  check(mgcn_train(model.get(), data.get(), &opts, &report_raw), "training");
  const std::string report = take(report_raw);
  check(mgcn_model_save(model.get(), o.out.c_str()), "saving " + o.out);
  if (!o.report.empty()) emit(o.report, report);

  const json r = json::parse(report);
  std::cout << "selected epoch " << r["best_epoch"] << ", validation F1 "
            << r["best_validation_f1"] << ", test F1 " << r["test"]["macro_f1"]
            << ", test accuracy " << r["test"]["accuracy"] << "\n";
  return kExitOk;
}

// ---- eval ----

struct Eval {
  std::string model;
  std::string data;
  std::string part = "test";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::vector<int> ratios{4, 1, 1};
  std::string report;
};

int run_eval(const Eval& o) {
  mgcn_model* raw = nullptr;
  check(mgcn_model_load(o.model.c_str(), &raw), "loading " + o.model);
  ModelPtr model(raw);
  DatasetPtr data = load_dataset(o.data);
  std::uint64_t seed = o.seed;
  if (!o.seed_given) check(mgcn_model_training_info(model.get(), &seed, nullptr, nullptr), "model");
  char* report = nullptr;
  check(mgcn_evaluate(model.get(), data.get(), o.part.c_str(), seed, o.ratios.data(), &report),
        "evaluating");
  emit(o.report, take(report));
  return kExitOk;
}

// ---- diffuse ----

struct Diffuse {
  std::string graph;
  double T = 1.0;
  double dt = 0.01;
  int channel = 0;
  std::string out;
  int record_every = 1;
};

int run_diffuse(const Diffuse& o) {
  mgcn_graph* raw = nullptr;
  check(mgcn_graph_read(o.graph.c_str(), &raw), "reading " + o.graph);
  GraphPtr g(raw);
  check(mgcn_diffuse(g.get(), o.channel, o.T, o.dt, o.record_every, o.out.c_str()),
        "diffusing " + o.graph);
  return kExitOk;
}

// ---- verify ----

struct Verify {
  std::string suite = "all";
  std::uint64_t seed = 7;
  std::string report;
  int learning_seeds = 5;
  int learning_epochs = 60;
  bool quiet = false;
};

int run_verify(const Verify& o) {
  char* report_raw = nullptr;
  int passed = 0;
  check(mgcn_verify(o.suite.c_str(), o.seed, o.learning_seeds, o.learning_epochs, !o.quiet,
                    &report_raw, &passed),
        "verify");
  const std::string report = take(report_raw);
  if (!o.report.empty()) emit(o.report, report);
  const json r = json::parse(report);
  for (const auto& s : r["suites"]) {
    std::cout << (s["passed"].get<bool>() ? "PASS " : "FAIL ") << s["criterion"] << " "
              << s["suite"].get<std::string>() << "\n";
  }
  return passed ? kExitOk : kExitInvalid;
}

// ---- count-params ----

struct CountParams {
  std::string descriptor;
  std::string manifold = "lorentz";
  int dim = 30;
  std::vector<int> widths{5, 8, 8};
  int hidden = 3;
  int classes = 3;
  int covariates = 0;
  std::string invariant = "difference";
  int degree_inputs = 0;
};

int run_count_params(const CountParams& o) {
  std::string text;
  if (!o.descriptor.empty()) {
    if (fs::exists(o.descriptor)) {
      std::ifstream in(o.descriptor);
      std::stringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    } else {
      text = o.descriptor;
    }
  } else {
    text = json{{"manifold", {{"kind", o.manifold}, {"dim", o.dim}}},
                {"widths", o.widths},
                {"hidden", o.hidden},
                {"classes", o.classes},
                {"covariates", o.covariates},
                {"invariant_mode", o.invariant},
                {"degree_inputs", o.degree_inputs}}
               .dump();
  }
  char* out = nullptr;
  check(mgcn_count_params(text.c_str(), &out), "counting parameters");
  std::cout << json::parse(take(out)).dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph neural networks on manifold-valued features"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "TOML/INI file with flag values (sections per subcommand)");
  app.set_version_flag("--version", std::string(mgcn_version()));

  GenData gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a seeded dataset");
  gen_cmd->add_option("--kind", gen.kind, "synthetic or mesh")
      ->check(CLI::IsMember({"synthetic", "mesh"}))
      ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->required();
  gen_cmd->add_option("--per-class", gen.per_class, "Samples per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen_cmd->add_option("--nodes", gen.nodes, "Nodes per synthetic graph")
      ->check(CLI::Range(2, 100000))
      ->capture_default_str();
  gen_cmd->add_option("--embedding", gen.embedding, "Synthetic feature embedding")
      ->check(CLI::IsMember({"onehot-lorentz", "degree-lorentz", "onehot-spd"}))
      ->capture_default_str();
  gen_cmd->add_option("--dim", gen.dim, "Manifold dimension (0 picks the default)")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--subdivisions", gen.subdivisions, "Icosphere subdivisions for meshes")
      ->check(CLI::Range(0, 6))
      ->capture_default_str();
  gen_cmd->add_option("--description", gen.description, "Manifest description");

  Train tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset");
  train_cmd->add_option("--data", tr.data, "Dataset directory or manifest")->required();
  train_cmd->add_option("--seed", tr.seed, "Seed for initialization, split and batches")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--history", tr.history, "Per-epoch history CSV");
  train_cmd->add_option("--report", tr.report, "Training report JSON");
  train_cmd->add_option("--epochs", tr.epochs)->check(CLI::NonNegativeNumber)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "ADAM learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--widths", tr.widths, "Channel widths, e.g. 5 8 8")->expected(2, 64);
  train_cmd->add_option("--hidden", tr.hidden, "Head hidden width")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--steps", tr.steps, "Explicit steps per diffusion layer")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--invariant", tr.invariant)
      ->check(CLI::IsMember({"difference", "pair"}))
      ->capture_default_str();
  train_cmd->add_option("--tmlp", tr.tmlp)->check(CLI::IsMember({"signed", "norm"}))->capture_default_str();
  train_cmd->add_flag("--degree-embedding", tr.degree_embedding, "Learn a degree embedding");
  train_cmd->add_option("--ratios", tr.ratios, "train validation test")->expected(3);
  train_cmd->add_option("--selection", tr.selection, "Tie rule for model selection")
      ->check(CLI::IsMember({"last", "first"}))
      ->capture_default_str();
  train_cmd->add_option("--averaging", tr.averaging, "Parameter averaging step (0 disables)")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_flag("--finite-differences", tr.finite_differences, "Use finite-difference gradients");
  train_cmd->add_flag("--verbose", tr.verbose, "Print one line per epoch");

  Eval ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--model", ev.model, "Checkpoint path")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset directory or manifest")->required();
  eval_cmd->add_option("--part", ev.part)
      ->check(CLI::IsMember({"all", "train", "validation", "test"}))
      ->capture_default_str();
  auto* eval_seed = eval_cmd->add_option("--seed", ev.seed, "Split seed (defaults to the training seed)");
  eval_cmd->add_option("--ratios", ev.ratios, "train validation test")->expected(3);
  eval_cmd->add_option("--report", ev.report, "Metrics JSON path (stdout if omitted)");

  Diffuse df;
  auto* diffuse_cmd = app.add_subcommand("diffuse", "Export a diffusion trajectory");
  diffuse_cmd->add_option("--graph", df.graph, "Graph JSON")->required();
  diffuse_cmd->add_option("--T", df.T, "Final time")->check(CLI::NonNegativeNumber)->capture_default_str();
  diffuse_cmd->add_option("--dt", df.dt, "Step size")->check(CLI::PositiveNumber)->capture_default_str();
  diffuse_cmd->add_option("--channel", df.channel)->check(CLI::NonNegativeNumber)->capture_default_str();
  diffuse_cmd->add_option("--out", df.out, "JSON-lines output")->required();
  diffuse_cmd->add_option("--record-every", df.record_every)->check(CLI::PositiveNumber)->capture_default_str();

  Verify vf;
  auto* verify_cmd = app.add_subcommand("verify", "Run property suites");
  std::vector<std::string> suites{"all"};
  {
    std::stringstream ss(mgcn_verify_suites());
    for (std::string s; std::getline(ss, s, ',');) suites.push_back(s);
  }
  verify_cmd->add_option("--suite", vf.suite)->check(CLI::IsMember(suites))->capture_default_str();
  verify_cmd->add_option("--seed", vf.seed)->capture_default_str();
  verify_cmd->add_option("--report", vf.report, "JSON report path");
  verify_cmd->add_option("--learning-seeds", vf.learning_seeds)->check(CLI::PositiveNumber)->capture_default_str();
  verify_cmd->add_option("--learning-epochs", vf.learning_epochs)->check(CLI::PositiveNumber)->capture_default_str();
  verify_cmd->add_flag("--quiet", vf.quiet, "Suppress progress output");

  CountParams cp;
  auto* count_cmd = app.add_subcommand("count-params", "Count model parameters");
  count_cmd->add_option("--descriptor", cp.descriptor, "Descriptor JSON text or file");
  count_cmd->add_option("--manifold", cp.manifold)
      ->check(CLI::IsMember({"euclidean", "sphere", "lorentz", "spd"}))
      ->capture_default_str();
  count_cmd->add_option("--dim", cp.dim)->check(CLI::PositiveNumber)->capture_default_str();
  count_cmd->add_option("--widths", cp.widths)->expected(2, 64);
  count_cmd->add_option("--hidden", cp.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  count_cmd->add_option("--classes", cp.classes)->check(CLI::PositiveNumber)->capture_default_str();
  count_cmd->add_option("--covariates", cp.covariates)->check(CLI::NonNegativeNumber)->capture_default_str();
  count_cmd->add_option("--invariant", cp.invariant)
      ->check(CLI::IsMember({"difference", "pair"}))
      ->capture_default_str();
  count_cmd->add_option("--degree-inputs", cp.degree_inputs)->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const CLI::App* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return kExitInvalid;
  }
  ev.seed_given = eval_seed->count() > 0;

  try {
    if (gen_cmd->parsed()) return run_gen_data(gen);
    if (train_cmd->parsed()) return run_train(tr);
    if (eval_cmd->parsed()) return run_eval(ev);
    if (diffuse_cmd->parsed()) return run_diffuse(df);
    if (verify_cmd->parsed()) return run_verify(vf);
    if (count_cmd->parsed()) return run_count_params(cp);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
