#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "mgcn/datagen.hpp"
#include "mgcn/errors.hpp"

namespace mgcn {

using Vec3 = Eigen::Vector3d;

void TriangleMesh::validate() const {
  const int n = static_cast<int>(vertices.cols());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& t = faces[f];
    for (int i : t) {
      if (i < 0 || i >= n) throw ContractViolation("face " + std::to_string(f) + ": bad vertex index");
    }
    const Vec3 a = vertices.col(t[0]), b = vertices.col(t[1]), c = vertices.col(t[2]);
    if (0.5 * (b - a).cross(c - a).norm() < 1e-12) {
      throw ContractViolation("face " + std::to_string(f) + " is degenerate");
    }
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

TriangleMesh parse_obj(std::string_view text) {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);
    if (line.empty() || line.front() == '#') continue;
    const auto tok = tokens(line);
    if (tok[0] == "v") {
      if (tok.size() < 4) throw SchemaError(where, "vertex needs three coordinates");
      Vec3 v;
      for (int i = 0; i < 3; ++i) {
        if (!parse_number(tok[i + 1], v(i))) throw SchemaError(where, "bad coordinate");
      }
      verts.push_back(v);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw SchemaError(where, "face needs at least three vertices");
      std::vector<int> idx;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const std::string_view head = tok[i].substr(0, tok[i].find('/'));
        int k = 0;
        if (!parse_number(head, k) || k == 0) throw SchemaError(where, "bad vertex reference");
        k = k > 0 ? k - 1 : static_cast<int>(verts.size()) + k;
        if (k < 0 || k >= static_cast<int>(verts.size())) {
          throw SchemaError(where, "vertex reference out of range");
        }
        idx.push_back(k);
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) faces.push_back({idx[0], idx[i], idx[i + 1]});
    }
    if (end == text.size()) break;
  }
  TriangleMesh mesh;
  mesh.vertices.resize(3, static_cast<Eigen::Index>(verts.size()));
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.col(static_cast<Eigen::Index>(i)) = verts[i];
  mesh.faces = std::move(faces);
  return mesh;
}

std::string format_obj(const TriangleMesh& mesh) {
  std::string out;
  char buf[128];
  for (Eigen::Index i = 0; i < mesh.vertices.cols(); ++i) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", mesh.vertices(0, i), mesh.vertices(1, i),
                  mesh.vertices(2, i));
    out += buf;
  }
  for (const auto& f : mesh.faces) {
    std::snprintf(buf, sizeof buf, "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out += buf;
  }
  return out;
}

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_obj(ss.str());
}

void write_obj(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << format_obj(mesh);
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::pair<int, int>> non_manifold_edges(const TriangleMesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = f[e], b = f[(e + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::vector<std::pair<int, int>> out;
  for (const auto& [edge, c] : count) {
    if (c > 2) out.push_back(edge);
  }
  return out;
}

TriangleMesh make_icosphere(int subdivisions) {
  if (subdivisions < 0) throw ContractViolation("icosphere: subdivisions must be >= 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> faces{
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      return mid[key] = static_cast<int>(v.size()) - 1;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  TriangleMesh mesh;
  mesh.vertices.resize(3, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) mesh.vertices.col(static_cast<Eigen::Index>(i)) = v[i];
  mesh.faces = std::move(faces);
  return mesh;
}

TriangleMesh make_cube() {
  TriangleMesh mesh;
  mesh.vertices.resize(3, 8);
  for (int i = 0; i < 8; ++i) mesh.vertices.col(i) = Vec3(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  mesh.faces = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return mesh;
}

double signed_volume(const TriangleMesh& mesh) {
  double vol = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices.col(f[0]), b = mesh.vertices.col(f[1]), c = mesh.vertices.col(f[2]);
    vol += a.dot(b.cross(c));
  }
  return vol / 6.0;
}

MeshGraph mesh_to_graph(const TriangleMesh& mesh, NormalWeighting weighting) {
  mesh.validate();
  const int n = static_cast<int>(mesh.vertices.cols());
  std::map<std::pair<int, int>, double> cot;
  Eigen::Matrix3Xd normals = Eigen::Matrix3Xd::Zero(3, n);
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const int i = f[(k + 1) % 3], j = f[(k + 2) % 3];
      const Vec3 a = mesh.vertices.col(i) - mesh.vertices.col(f[k]);
      const Vec3 b = mesh.vertices.col(j) - mesh.vertices.col(f[k]);
      cot[{std::min(i, j), std::max(i, j)}] += 0.5 * a.dot(b) / a.cross(b).norm();
    }
    for (int k = 0; k < 3; ++k) {
      const Vec3 p = mesh.vertices.col(f[k]);
      const Vec3 a = Vec3(mesh.vertices.col(f[(k + 1) % 3])) - p;
      const Vec3 b = Vec3(mesh.vertices.col(f[(k + 2) % 3])) - p;
      Vec3 fn = a.cross(b);
      switch (weighting) {
        case NormalWeighting::Max: fn /= a.squaredNorm() * b.squaredNorm(); break;
        case NormalWeighting::Area: break;
        case NormalWeighting::Uniform: fn.normalize(); break;
      }
      normals.col(f[k]) += fn;
    }
  }
  Mat features(3, n);
  for (int v = 0; v < n; ++v) {
    const double len = normals.col(v).norm();
    if (len < 1e-12) throw ContractViolation("vertex " + std::to_string(v) + " has no normal");
    features.col(v) = normals.col(v) / len;
  }
  MeshGraph out;
  std::vector<Edge> edges;
  edges.reserve(2 * cot.size());
  for (const auto& [key, w] : cot) {
    double weight = w;
    if (weight <= kCotangentFloor) {
      weight = kCotangentFloor;
      ++out.clamped_weights;
    }
    edges.push_back({key.first, key.second, weight});
    edges.push_back({key.second, key.first, weight});
  }
  out.volume = signed_volume(mesh);
  out.graph = FeatureGraph(std::make_shared<Graph>(n, std::move(edges)), ManifoldKind::sphere(2),
                           {features}, -1, Vec::Constant(1, out.volume));
  return out;
}

TriangleMesh make_deformed_icosphere(int subdivisions, int label, Rng& rng) {
  if (label != 0 && label != 1) throw ContractViolation("deformed icosphere: label must be 0 or 1");
  TriangleMesh mesh = make_icosphere(subdivisions);
  constexpr int kWaves = 6;
  const double freq = label == 0 ? 1.5 : 5.0;
  const double amp = label == 0 ? 0.15 : 0.06;
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> scale(0.8, 1.2);
  std::vector<std::pair<Vec3, double>> waves;
  for (int j = 0; j < kWaves; ++j) {
    Vec3 u(gauss(rng), gauss(rng), gauss(rng));
    waves.emplace_back(u.normalized(), phase(rng));
  }
  const double s = scale(rng);
  for (Eigen::Index i = 0; i < mesh.vertices.cols(); ++i) {
    const Vec3 x = mesh.vertices.col(i);
    double r = 0.0;
    for (const auto& [u, phi] : waves) r += std::sin(freq * u.dot(x) + phi);
    mesh.vertices.col(i) = s * (1.0 + amp * r / std::sqrt(double(kWaves))) * x;
  }
  return mesh;
}

}  // namespace mgcn
