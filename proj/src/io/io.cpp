#include "mgcn/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mgcn/errors.hpp"

namespace mgcn {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void write_text_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", what + " is not valid JSON: " + e.what());
  }
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "/" + key, "missing field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  return j.get<long long>();
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  return j;
}

std::string string_field(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) throw SchemaError(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

// Points travel row-major; SPD columns are stored column-major internally.
Vec to_row_major(const Vec& p, const ManifoldKind& k) {
  if (k.tag != ManifoldTag::SPD) return p;
  return linalg::as_vector(linalg::as_matrix(p, k.dim).transpose());
}

json kind_json(const ManifoldKind& k) { return {{"kind", k.name()}, {"dim", k.dim}}; }

ManifoldKind kind_from_json(const json& j, const std::string& path) {
  const std::string name = string_field(j, "kind", path);
  const int dim = static_cast<int>(integer(field(j, "dim", path), path + "/dim"));
  try {
    return parse_manifold_kind(name, dim);
  } catch (const ContractViolation& e) {
    throw SchemaError(path, e.what());
  }
}

json graph_json(const FeatureGraph& g) {
  json edges = json::array();
  for (const Edge& e : g.graph().edges()) edges.push_back({e.from, e.to, e.weight});
  json channels = json::array();
  for (const Mat& c : g.channels()) {
    json pts = json::array();
    for (Eigen::Index v = 0; v < c.cols(); ++v) {
      const Vec p = to_row_major(c.col(v), g.kind());
      pts.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    }
    channels.push_back(std::move(pts));
  }
  json j = {{"version", kGraphSchemaVersion},
            {"manifold", kind_json(g.kind())},
            {"nodes", g.node_count()},
            {"edges", std::move(edges)},
            {"channels", std::move(channels)}};
  if (g.label() >= 0) j["label"] = g.label();
  if (g.covariates().size() > 0) {
    j["covariates"] = std::vector<double>(g.covariates().data(),
                                          g.covariates().data() + g.covariates().size());
  }
  return j;
}

FeatureGraph graph_from(const json& j) {
  const long long version = integer(field(j, "version", ""), "/version");
  if (version != kGraphSchemaVersion) {
    throw SchemaError("/version", "unsupported graph schema version " + std::to_string(version));
  }
  const ManifoldKind kind = kind_from_json(field(j, "manifold", ""), "/manifold");
  const long long n = integer(field(j, "nodes", ""), "/nodes");
  if (n < 0) throw SchemaError("/nodes", "must be non-negative");

  std::vector<Edge> edges;
  const json& ej = array(field(j, "edges", ""), "/edges");
  for (std::size_t i = 0; i < ej.size(); ++i) {
    const std::string p = "/edges/" + std::to_string(i);
    const json& e = array(ej[i], p);
    if (e.size() < 2) throw SchemaError(p + "/0", "edge needs from and to");
    if (e.size() < 3) throw SchemaError(p + "/2", "missing weight");
    if (e.size() > 3) throw SchemaError(p, "edge has more than three entries");
    edges.push_back({static_cast<int>(integer(e[0], p + "/0")),
                     static_cast<int>(integer(e[1], p + "/1")), number(e[2], p + "/2")});
  }
  GraphPtr graph;
  try {
    graph = std::make_shared<Graph>(static_cast<int>(n), std::move(edges));
  } catch (const ContractViolation& e) {
    throw SchemaError("/edges", e.what());
  }

  const int dim = kind.ambient_dim();
  std::vector<Mat> channels;
  const json& cj = array(field(j, "channels", ""), "/channels");
  for (std::size_t c = 0; c < cj.size(); ++c) {
    const std::string cp = "/channels/" + std::to_string(c);
    const json& pts = array(cj[c], cp);
    if (static_cast<long long>(pts.size()) != n) {
      throw SchemaError(cp, "expected " + std::to_string(n) + " points");
    }
    Mat f(dim, n);
    for (std::size_t v = 0; v < pts.size(); ++v) {
      const std::string pp = cp + "/" + std::to_string(v);
      const json& pt = array(pts[v], pp);
      if (static_cast<int>(pt.size()) != dim) {
        throw SchemaError(pp, "expected " + std::to_string(dim) + " coordinates");
      }
      Vec p(dim);
      for (int k = 0; k < dim; ++k) p(k) = number(pt[k], pp + "/" + std::to_string(k));
      f.col(static_cast<Eigen::Index>(v)) = to_row_major(p, kind);
    }
    channels.push_back(std::move(f));
  }
  int label = -1;
  if (j.contains("label") && !j["label"].is_null()) {
    label = static_cast<int>(integer(j["label"], "/label"));
  }
  Vec cov;
  if (j.contains("covariates")) {
    const json& cv = array(j["covariates"], "/covariates");
    cov.resize(static_cast<Eigen::Index>(cv.size()));
    for (std::size_t i = 0; i < cv.size(); ++i) {
      cov(static_cast<Eigen::Index>(i)) = number(cv[i], "/covariates/" + std::to_string(i));
    }
  }
  try {
    return FeatureGraph(graph, kind, std::move(channels), label, cov);
  } catch (const ContractViolation& e) {
    throw SchemaError("/channels", e.what());
  }
}

}  // namespace

std::string graph_to_json(const FeatureGraph& g, int indent) { return graph_json(g).dump(indent); }

FeatureGraph graph_from_json(const std::string& text) { return graph_from(parse_json(text, "graph")); }

FeatureGraph read_graph(const std::string& path) {
  try {
    return graph_from_json(read_text(path));
  } catch (const SchemaError& e) {
    throw SchemaError(path + "#" + e.path(), std::string(e.what()).substr(e.path().size() + 2));
  }
}

void write_graph(const FeatureGraph& g, const std::string& path) {
  write_text_atomic(path, graph_to_json(g) + "\n");
}

void write_dataset(const Dataset& data, const std::string& dir, const std::string& description) {
  json samples = json::array();
  for (const Sample& s : data) {
    const std::string file = s.id + ".json";
    write_graph(s.graph, (fs::path(dir) / file).string());
    samples.push_back({{"id", s.id}, {"file", file}, {"label", s.graph.label()}, {"seed", s.seed}});
  }
  const json manifest = {{"version", kManifestVersion},
                         {"description", description},
                         {"samples", std::move(samples)}};
  write_text_atomic((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

Dataset read_dataset(const std::string& manifest_path) {
  const json j = parse_json(read_text(manifest_path), manifest_path);
  const long long version = integer(field(j, "version", ""), "/version");
  if (version != kManifestVersion) {
    throw SchemaError("/version", "unsupported manifest version " + std::to_string(version));
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  const json& samples = array(field(j, "samples", ""), "/samples");
  Dataset out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string p = "/samples/" + std::to_string(i);
    Sample s;
    s.id = string_field(samples[i], "id", p);
    s.graph = read_graph((base / string_field(samples[i], "file", p)).string());
    if (samples[i].contains("seed")) s.seed = samples[i]["seed"].get<std::uint64_t>();
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

json descriptor_json(const ModelDescriptor& d) {
  return {{"manifold", kind_json(d.kind)},
          {"widths", d.widths},
          {"steps", d.steps},
          {"hidden", d.hidden},
          {"classes", d.classes},
          {"covariates", d.covariates},
          {"tmlp_mode", d.tmlp_mode == TmlpMode::Signed ? "signed" : "norm"},
          {"slope", d.slope},
          {"invariant_mode", d.invariant_mode == InvariantMode::Difference ? "difference" : "pair"},
          {"reference_channel", d.reference_channel},
          {"degree_inputs", d.degree_inputs}};
}

ModelDescriptor descriptor_from(const json& j, const std::string& path) {
  ModelDescriptor d;
  d.kind = kind_from_json(field(j, "manifold", path), path + "/manifold");
  d.widths.clear();
  const json& w = array(field(j, "widths", path), path + "/widths");
  for (std::size_t i = 0; i < w.size(); ++i) {
    d.widths.push_back(static_cast<int>(integer(w[i], path + "/widths/" + std::to_string(i))));
  }
  auto get_int = [&](const char* key) {
    return static_cast<int>(integer(field(j, key, path), path + "/" + key));
  };
  d.steps = get_int("steps");
  d.hidden = get_int("hidden");
  d.classes = get_int("classes");
  d.covariates = get_int("covariates");
  d.reference_channel = get_int("reference_channel");
  d.degree_inputs = get_int("degree_inputs");
  d.slope = number(field(j, "slope", path), path + "/slope");
  const std::string tm = string_field(j, "tmlp_mode", path);
  if (tm != "signed" && tm != "norm") throw SchemaError(path + "/tmlp_mode", "unknown mode " + tm);
  d.tmlp_mode = tm == "signed" ? TmlpMode::Signed : TmlpMode::Norm;
  const std::string im = string_field(j, "invariant_mode", path);
  if (im != "difference" && im != "pair") {
    throw SchemaError(path + "/invariant_mode", "unknown mode " + im);
  }
  d.invariant_mode = im == "difference" ? InvariantMode::Difference : InvariantMode::Pair;
  try {
    d.validate();
  } catch (const ContractViolation& e) {
    throw SchemaError(path, e.what());
  }
  return d;
}

}  // namespace

std::string descriptor_to_json(const ModelDescriptor& d) { return descriptor_json(d).dump(2); }

ModelDescriptor descriptor_from_json(const std::string& text) {
  return descriptor_from(parse_json(text, "descriptor"), "");
}

void write_checkpoint(const Checkpoint& c, const std::string& path) {
  const Vec& flat = c.params.flat();
  const json j = {{"version", kCheckpointVersion},
                  {"descriptor", descriptor_json(c.params.descriptor())},
                  {"params", std::vector<double>(flat.data(), flat.data() + flat.size())},
                  {"seed", c.seed},
                  {"epoch", c.epoch},
                  {"validation_score", c.validation_score}};
  write_text_atomic(path, j.dump(2) + "\n");
}

Checkpoint read_checkpoint(const std::string& path) {
  const json j = parse_json(read_text(path), path);
  const long long version = integer(field(j, "version", ""), "/version");
  if (version != kCheckpointVersion) {
    throw SchemaError("/version", "unsupported checkpoint version " + std::to_string(version));
  }
  const ModelDescriptor d = descriptor_from(field(j, "descriptor", ""), "/descriptor");
  const json& pj = array(field(j, "params", ""), "/params");
  Vec flat(static_cast<Eigen::Index>(pj.size()));
  for (std::size_t i = 0; i < pj.size(); ++i) {
    flat(static_cast<Eigen::Index>(i)) = number(pj[i], "/params/" + std::to_string(i));
  }
  Checkpoint c;
  try {
    c.params = ModelParams(d, flat);
  } catch (const ContractViolation& e) {
    throw SchemaError("/params", e.what());
  }
  c.seed = field(j, "seed", "").get<std::uint64_t>();
  c.epoch = static_cast<int>(integer(field(j, "epoch", ""), "/epoch"));
  c.validation_score = number(field(j, "validation_score", ""), "/validation_score");
  return c;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,validation_f1,validation_accuracy\n";
  char buf[160];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.validation_f1,
                  r.validation_accuracy);
    out += buf;
  }
  return out;
}

std::string trajectory_jsonl(const Trajectory& traj) {
  std::string out;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const Mat& s = traj.snapshots[i];
    json line = json::object();
    line["t"] = traj.times[i];
    line["coords"] = std::vector<double>(s.data(), s.data() + s.size());
    out += line.dump();
    out += '\n';
  }
  return out;
}

Trajectory parse_trajectory_jsonl(const std::string& text, int ambient_dim) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string p = "line " + std::to_string(line_no);
    const json j = parse_json(line, p);
    const json& coords = array(field(j, "coords", p), p + "/coords");
    if (coords.size() % static_cast<std::size_t>(ambient_dim) != 0) {
      throw SchemaError(p + "/coords", "length is not a multiple of the ambient dimension");
    }
    Mat s(ambient_dim, static_cast<Eigen::Index>(coords.size()) / ambient_dim);
    for (std::size_t k = 0; k < coords.size(); ++k) s.data()[k] = number(coords[k], p + "/coords");
    traj.times.push_back(number(field(j, "t", p), p + "/t"));
    traj.snapshots.push_back(std::move(s));
  }
  if (traj.times.size() >= 2) traj.dt = traj.times[1] - traj.times[0];
  return traj;
}

}  // namespace mgcn
