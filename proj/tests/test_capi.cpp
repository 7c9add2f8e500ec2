#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgcn/mgcn.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* kSphereGraph = R"({"version":1,"manifold":{"kind":"sphere","dim":2},"nodes":3,
  "edges":[[0,1,0.5],[1,0,0.5],[1,2,0.5],[2,1,0.5]],
  "channels":[[[0,0,1],[1,0,0],[0,1,0]]],"label":1})";

const char* kAntipodalGraph = R"({"version":1,"manifold":{"kind":"sphere","dim":2},"nodes":2,
  "edges":[[0,1,1.0],[1,0,1.0]],"channels":[[[0,0,1],[0,0,-1]]]})";

std::string take(char* s) {
  std::string out = s;
  mgcn_string_free(s);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mgcn_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

mgcn_dataset* small_dataset(uint64_t seed) {
  mgcn_dataset* d = nullptr;
  REQUIRE(mgcn_dataset_synthetic(4, 10, "onehot-lorentz", seed, 0, &d) == MGCN_OK);
  return d;
}

}  // namespace

TEST_CASE("status names and null arguments") {
  CHECK(std::string(mgcn_status_name(MGCN_ERR_CUT_LOCUS)) == "cut locus");
  CHECK(mgcn_graph_from_json(nullptr, nullptr) == MGCN_ERR_CONTRACT);
  CHECK(std::strlen(mgcn_last_error()) > 0);
  mgcn_graph_free(nullptr);
  mgcn_model_free(nullptr);
  mgcn_dataset_free(nullptr);
}

TEST_CASE("graph json round trip and info") {
  mgcn_graph* g = nullptr;
  REQUIRE(mgcn_graph_from_json(kSphereGraph, &g) == MGCN_OK);
  int nodes = 0, edges = 0, channels = 0, ambient = 0;
  REQUIRE(mgcn_graph_info(g, &nodes, &edges, &channels, &ambient) == MGCN_OK);
  CHECK(nodes == 3);
  CHECK(edges == 4);
  CHECK(channels == 1);
  CHECK(ambient == 3);
  char* text = nullptr;
  REQUIRE(mgcn_graph_to_json(g, &text) == MGCN_OK);
  const std::string first = take(text);
  mgcn_graph* g2 = nullptr;
  REQUIRE(mgcn_graph_from_json(first.c_str(), &g2) == MGCN_OK);
  REQUIRE(mgcn_graph_to_json(g2, &text) == MGCN_OK);
  CHECK(take(text) == first);
  mgcn_graph_free(g);
  mgcn_graph_free(g2);
}

TEST_CASE("schema errors name the path") {
  mgcn_graph* g = nullptr;
  CHECK(mgcn_graph_from_json(R"({"version":1,"manifold":{"kind":"sphere","dim":2},"nodes":2,
      "edges":[[0,1]],"channels":[[[0,0,1],[1,0,0]]]})",
                             &g) == MGCN_ERR_SCHEMA);
  CHECK(std::string(mgcn_last_error()).find("/edges/0") != std::string::npos);
  CHECK(mgcn_graph_from_json("not json", &g) == MGCN_ERR_SCHEMA);
}

TEST_CASE("parameter count of the reference descriptor") {
  char* out = nullptr;
  REQUIRE(mgcn_count_params(R"({"manifold":{"kind":"lorentz","dim":30},"widths":[5,8,8],"hidden":3})",
                            &out) == MGCN_OK);
  const json j = json::parse(take(out));
  CHECK(j["total"] == 425);
  CHECK(j["breakdown"][0]["count"] == 10);
  CHECK(j["breakdown"][1]["count"] == 80);
  CHECK(mgcn_count_params(R"({"widths":[5,8,8],"colour":1})", &out) == MGCN_ERR_SCHEMA);
  CHECK(mgcn_count_params(R"({"widths":[5]})", &out) == MGCN_ERR_SCHEMA);
}

TEST_CASE("model forward, save and load") {
  mgcn_model* m = nullptr;
  REQUIRE(mgcn_model_create(R"({"manifold":{"kind":"sphere","dim":2},"widths":[1,2,2],"classes":2})",
                            11, &m) == MGCN_OK);
  mgcn_graph* g = nullptr;
  REQUIRE(mgcn_graph_from_json(kSphereGraph, &g) == MGCN_OK);
  double lp[2] = {0, 0};
  CHECK(mgcn_model_forward(m, g, lp, 1) == MGCN_ERR_CONTRACT);
  REQUIRE(mgcn_model_forward(m, g, lp, 2) == MGCN_OK);
  CHECK(std::exp(lp[0]) + std::exp(lp[1]) == doctest::Approx(1.0).epsilon(1e-12));

  const fs::path dir = scratch("model");
  const std::string path = (dir / "m.json").string();
  REQUIRE(mgcn_model_save(m, path.c_str()) == MGCN_OK);
  mgcn_model* m2 = nullptr;
  REQUIRE(mgcn_model_load(path.c_str(), &m2) == MGCN_OK);
  double lp2[2] = {0, 0};
  REQUIRE(mgcn_model_forward(m2, g, lp2, 2) == MGCN_OK);
  CHECK(lp2[0] == lp[0]);
  CHECK(lp2[1] == lp[1]);
  int64_t count = 0;
  REQUIRE(mgcn_model_param_count(m2, &count) == MGCN_OK);
  CHECK(count > 0);
  CHECK(mgcn_model_load((dir / "missing.json").string().c_str(), &m2) == MGCN_ERR_IO);
  mgcn_model_free(m);
  mgcn_model_free(m2);
  mgcn_graph_free(g);
}

TEST_CASE("dataset write, read and summary") {
  mgcn_dataset* d = small_dataset(3);
  const fs::path dir = scratch("dataset");
  REQUIRE(mgcn_dataset_write(d, dir.string().c_str(), "test") == MGCN_OK);
  mgcn_dataset* d2 = nullptr;
  REQUIRE(mgcn_dataset_read((dir / "manifest.json").string().c_str(), &d2) == MGCN_OK);
  int size = 0;
  REQUIRE(mgcn_dataset_size(d2, &size) == MGCN_OK);
  CHECK(size == 12);
  char* s = nullptr;
  REQUIRE(mgcn_dataset_summary(d2, &s) == MGCN_OK);
  const json j = json::parse(take(s));
  CHECK(j["classes"] == 3);
  CHECK(j["manifold"]["kind"] == "lorentz");
  mgcn_dataset_free(d2);
  CHECK(mgcn_dataset_synthetic(4, 10, "bogus", 1, 0, &d2) == MGCN_ERR_CONTRACT);
  mgcn_dataset_free(d);
}

TEST_CASE("training is deterministic and evaluation reproduces the split") {
  mgcn_dataset* d = small_dataset(5);
  const char* desc = R"({"manifold":{"kind":"lorentz","dim":10},"widths":[2,3,3],"hidden":3})";
  mgcn_train_options opts;
  mgcn_train_options_default(&opts);
  CHECK(opts.epochs == 60);
  CHECK(opts.batch_size == 3);
  opts.epochs = 2;
  opts.seed = 9;
  std::string reports[2];
  double first_lp = 0.0;
  for (int run = 0; run < 2; ++run) {
    mgcn_model* m = nullptr;
    REQUIRE(mgcn_model_create(desc, 9, &m) == MGCN_OK);
    char* r = nullptr;
    REQUIRE(mgcn_train(m, d, &opts, &r) == MGCN_OK);
    reports[run] = take(r);
    uint64_t seed = 0;
    int epoch = -1;
    REQUIRE(mgcn_model_training_info(m, &seed, &epoch, nullptr) == MGCN_OK);
    CHECK(seed == 9);
    CHECK(epoch >= 0);

    const json report = json::parse(reports[run]);
    char* e = nullptr;
    REQUIRE(mgcn_evaluate(m, d, "test", 9, opts.ratios, &e) == MGCN_OK);
    const json eval = json::parse(take(e));
    CHECK(eval["macro_f1"] == report["test"]["macro_f1"]);
    CHECK(eval["samples"] == report["split"]["test"].size());
    if (run == 0) first_lp = eval["mean_loss"];
    else CHECK(eval["mean_loss"] == first_lp);
    mgcn_model_free(m);
  }
  CHECK(reports[0] == reports[1]);
  mgcn_dataset_free(d);
}

TEST_CASE("diffusion export and cut locus status") {
  const fs::path dir = scratch("diffuse");
  mgcn_graph* g = nullptr;
  REQUIRE(mgcn_graph_from_json(kSphereGraph, &g) == MGCN_OK);
  const std::string out = (dir / "t.jsonl").string();
  REQUIRE(mgcn_diffuse(g, 0, 0.5, 0.1, 1, out.c_str()) == MGCN_OK);
  std::ifstream in(out);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 6);
  CHECK(mgcn_diffuse(g, 1, 0.5, 0.1, 1, out.c_str()) == MGCN_ERR_CONTRACT);
  mgcn_graph_free(g);

  REQUIRE(mgcn_graph_from_json(kAntipodalGraph, &g) == MGCN_OK);
  CHECK(mgcn_diffuse(g, 0, 0.5, 0.1, 1, out.c_str()) == MGCN_ERR_CUT_LOCUS);
  CHECK(std::string(mgcn_last_error()).find("0 -> 1") != std::string::npos);
  mgcn_graph_free(g);
}

TEST_CASE("verify runs a named suite") {
  const std::string suites = mgcn_verify_suites();
  CHECK(suites.rfind("geometry,", 0) == 0);
  char* r = nullptr;
  int passed = 0;
  REQUIRE(mgcn_verify("params", 7, 0, 0, 0, &r, &passed) == MGCN_OK);
  const json j = json::parse(take(r));
  CHECK(passed == 1);
  CHECK(j["suites"][0]["criterion"] == 10);
  CHECK(mgcn_verify("nope", 7, 0, 0, 0, &r, &passed) == MGCN_ERR_CONTRACT);
}
