#ifndef INVERSEVIS_MESH_HPP
#define INVERSEVIS_MESH_HPP

#include "errors.hpp"
#include "math.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace inversevis {

using Triangle = std::array<int, 3>;

/// Indexed triangle mesh carrying one scalar per vertex.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<double> scalars;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  Vec3 corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }

  /// Throws ConfigError when an index is out of range or scalars don't match.
  void validate() const
  {
    const auto n = static_cast<long long>(vertices.size());
    for (const auto& t : triangles) {
      for (int idx : t) {
        if (idx < 0 || idx >= n) throw ConfigError("triangle index out of range");
      }
    }
    if (scalars.size() != vertices.size()) throw ConfigError("scalar count mismatch");
    for (double s : scalars) {
      if (!std::isfinite(s)) throw ConfigError("non-finite scalar");
    }
  }
};

enum class ImportanceMode { scalar, visibility, mask };

/// Chooses the importance function s(x) used by the energy.
struct ImportanceField {
  ImportanceMode mode = ImportanceMode::scalar;
  std::vector<std::uint8_t> mask;

  static ImportanceField scalar_field() { return {}; }
  static ImportanceField visibility_field() { return {ImportanceMode::visibility, {}}; }
  static ImportanceField mask_field(std::vector<std::uint8_t> flags)
  {
    return {ImportanceMode::mask, std::move(flags)};
  }

  void validate(const Mesh& mesh) const
  {
    if (mode == ImportanceMode::mask && mask.size() != mesh.vertex_count()) {
      throw ConfigError("importance mask must have one flag per vertex");
    }
  }

  /// Per-vertex importance value (visibility mode is constant 1).
  double vertex_value(const Mesh& mesh, int v) const
  {
    switch (mode) {
      case ImportanceMode::scalar: return mesh.scalars[v];
      case ImportanceMode::mask: return mask[v] ? 1.0 : 0.0;
      case ImportanceMode::visibility: return 1.0;
    }
    return 0.0;
  }
};

inline const char* to_string(ImportanceMode m)
{
  switch (m) {
    case ImportanceMode::scalar: return "scalar";
    case ImportanceMode::visibility: return "visibility";
    case ImportanceMode::mask: return "mask";
  }
  return "?";
}

inline ImportanceMode parse_importance_mode(const std::string& s)
{
  if (s == "scalar") return ImportanceMode::scalar;
  if (s == "visibility") return ImportanceMode::visibility;
  if (s == "mask") return ImportanceMode::mask;
  throw ConfigError("unknown energy mode '" + s + "'");
}

namespace detail {

inline std::ifstream open_for_read(const std::filesystem::path& path)
{
  if (!std::filesystem::exists(path)) throw IoError("missing file: " + path.string());
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());
  return in;
}

inline bool next_content_line(std::istream& in, std::string& line)
{
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line.back() == '\r') line.pop_back();
    return true;
  }
  return false;
}

inline void read_face(std::istringstream& ss, Mesh& mesh)
{
  int n = 0;
  if (!(ss >> n)) throw ConfigError("malformed face record");
  if (n != 3) throw ConfigError("non-triangle face (" + std::to_string(n) + " vertices)");
  Triangle t{};
  for (int k = 0; k < 3; ++k) {
    if (!(ss >> t[k])) throw ConfigError("malformed face record");
  }
  mesh.triangles.push_back(t);
}

inline bool is_scalar_property(const std::string& name)
{
  return name == "scalar" || name == "quality" || name == "value" || name == "s";
}

inline Mesh read_ply_ascii(std::istream& in)
{
  std::string line;
  std::size_t nverts = 0, nfaces = 0;
  std::vector<std::string> vprops;
  std::string current;
  bool ascii = false;
  while (next_content_line(in, line)) {
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = (fmt == "ascii");
    } else if (kw == "element") {
      ss >> current;
      std::size_t n = 0;
      ss >> n;
      if (current == "vertex") nverts = n;
      else if (current == "face") nfaces = n;
    } else if (kw == "property" && current == "vertex") {
      std::string type, name;
      ss >> type >> name;
      vprops.push_back(name);
    } else if (kw == "end_header") {
      break;
    }
  }
  if (!ascii) throw ConfigError("only ASCII PLY meshes are supported");

  int ix = -1, iy = -1, iz = -1, is = -1;
  for (int k = 0; k < static_cast<int>(vprops.size()); ++k) {
    if (vprops[k] == "x") ix = k;
    else if (vprops[k] == "y") iy = k;
    else if (vprops[k] == "z") iz = k;
    else if (is < 0 && is_scalar_property(vprops[k])) is = k;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ConfigError("PLY vertex element lacks x/y/z");

  Mesh mesh;
  mesh.vertices.reserve(nverts);
  std::vector<double> values(vprops.size());
  for (std::size_t v = 0; v < nverts; ++v) {
    if (!next_content_line(in, line)) throw ConfigError("truncated PLY vertex list");
    std::istringstream ss(line);
    for (auto& x : values) {
      std::string tok;
      if (!(ss >> tok)) throw ConfigError("malformed PLY vertex record");
      x = std::strtod(tok.c_str(), nullptr);
    }
    mesh.vertices.emplace_back(values[ix], values[iy], values[iz]);
    if (is >= 0) mesh.scalars.push_back(values[is]);
  }
  for (std::size_t f = 0; f < nfaces; ++f) {
    if (!next_content_line(in, line)) throw ConfigError("truncated PLY face list");
    std::istringstream ss(line);
    read_face(ss, mesh);
  }
  return mesh;
}

inline Mesh read_off(std::istream& in)
{
  std::string line;
  next_content_line(in, line);
  std::size_t nverts = 0, nfaces = 0;
  {
    std::string rest = line.substr(line.find("OFF") + 3);
    std::istringstream ss(rest);
    if (!(ss >> nverts >> nfaces)) {
      if (!next_content_line(in, line)) throw ConfigError("truncated OFF header");
      std::istringstream ss2(line);
      ss2 >> nverts >> nfaces;
    }
  }
  Mesh mesh;
  mesh.vertices.reserve(nverts);
  for (std::size_t v = 0; v < nverts; ++v) {
    if (!next_content_line(in, line)) throw ConfigError("truncated OFF vertex list");
    std::istringstream ss(line);
    Vec3 p;
    if (!(ss >> p.x() >> p.y() >> p.z())) throw ConfigError("malformed OFF vertex record");
    mesh.vertices.push_back(p);
  }
  for (std::size_t f = 0; f < nfaces; ++f) {
    if (!next_content_line(in, line)) throw ConfigError("truncated OFF face list");
    std::istringstream ss(line);
    read_face(ss, mesh);
  }
  return mesh;
}

}  // namespace detail

/// Reads one scalar per line (blank lines ignored).
inline std::vector<double> read_scalar_sidecar(const std::filesystem::path& path)
{
  auto in = detail::open_for_read(path);
  std::vector<double> values;
  std::string line;
  while (detail::next_content_line(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) {
      if (tok == "nan" || tok == "NaN" || tok == "NAN") throw ConfigError("NaN scalar");
      throw ConfigError("unparseable scalar '" + tok + "'");
    }
    values.push_back(v);
  }
  return values;
}

/// Loads an ASCII PLY or OFF triangle mesh. Scalars come from a vertex
/// property (`scalar`, `quality`, `value` or `s`) unless a sidecar is given.
inline Mesh load_mesh(const std::filesystem::path& path,
                      const std::optional<std::filesystem::path>& sidecar = std::nullopt)
{
  auto in = detail::open_for_read(path);
  std::string magic;
  std::getline(in, magic);
  in.seekg(0);
  Mesh mesh;
  if (magic.rfind("ply", 0) == 0) mesh = detail::read_ply_ascii(in);
  else if (magic.find("OFF") != std::string::npos) mesh = detail::read_off(in);
  else throw ConfigError("unrecognised mesh format: " + path.string());

  if (sidecar) mesh.scalars = read_scalar_sidecar(*sidecar);
  if (mesh.scalars.empty() && !sidecar) {
    throw ConfigError("mesh has no per-vertex scalar and no sidecar was given");
  }
  if (mesh.scalars.size() != mesh.vertices.size()) throw ConfigError("scalar count mismatch");
  for (double s : mesh.scalars) {
    if (std::isnan(s)) throw ConfigError("NaN scalar");
  }
  mesh.validate();
  return mesh;
}

/// Writes an ASCII PLY with a `scalar` vertex property.
inline void save_ply(const Mesh& mesh, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\nproperty double scalar\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  out.precision(17);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const auto& p = mesh.vertices[v];
    out << p.x() << ' ' << p.y() << ' ' << p.z() << ' '
        << (v < mesh.scalars.size() ? mesh.scalars[v] : 0.0) << '\n';
  }
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

/// Uniform scale + translation into [-1,1]^3 (longest axis touches +-1),
/// scalars min-max rescaled to [0,1]. A constant field becomes all zero.
inline Mesh normalize(const Mesh& mesh)
{
  if (mesh.vertices.empty() || mesh.triangles.empty()) throw ConfigError("cannot normalize an empty mesh");
  Vec3 lo = mesh.vertices.front(), hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) throw NumericalError("degenerate mesh (zero extent)");
  const Vec3 center = 0.5 * (lo + hi);
  const double scale = 2.0 / extent;

  Mesh out = mesh;
  for (auto& v : out.vertices) v = (v - center) * scale;

  if (!out.scalars.empty()) {
    auto [mn, mx] = std::minmax_element(out.scalars.begin(), out.scalars.end());
    const double smin = *mn, srange = *mx - *mn;
    for (auto& s : out.scalars) s = srange > 0.0 ? (s - smin) / srange : 0.0;
  }
  return out;
}

/// Weighted sum of a triangle's vertex scalars.
inline double barycentric_scalar(const Mesh& mesh, std::size_t tri, const Vec3& bary)
{
  if (tri >= mesh.triangles.size()) throw ConfigError("triangle index out of range");
  if (bary.minCoeff() < -1e-6 || std::abs(bary.sum() - 1.0) > 1e-6) {
    throw ConfigError("barycentric weights must be non-negative and sum to 1");
  }
  const auto& t = mesh.triangles[tri];
  return bary[0] * mesh.scalars[t[0]] + bary[1] * mesh.scalars[t[1]] + bary[2] * mesh.scalars[t[2]];
}

/// Same interpolation over an arbitrary per-vertex importance.
inline double barycentric_importance(const Mesh& mesh, const ImportanceField& field, std::size_t tri,
                                     const Vec3& bary)
{
  const auto& t = mesh.triangles[tri];
  return bary[0] * field.vertex_value(mesh, t[0]) + bary[1] * field.vertex_value(mesh, t[1]) +
         bary[2] * field.vertex_value(mesh, t[2]);
}

/// Gradient of the linear interpolant of per-vertex importance over one
/// triangle. Lies in the triangle plane; zero for degenerate triangles.
inline Vec3 triangle_importance_gradient(const Mesh& mesh, const ImportanceField& field, std::size_t tri)
{
  const auto& t = mesh.triangles[tri];
  const Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
  const Vec3 n = (b - a).cross(c - a);
  const double area2 = n.squaredNorm();
  if (area2 < 1e-30) return Vec3::Zero();
  const double sa = field.vertex_value(mesh, t[0]);
  const double sb = field.vertex_value(mesh, t[1]);
  const double sc = field.vertex_value(mesh, t[2]);
  // grad s = sum_i s_i * (n x e_i) / |n|^2, e_i the edge opposite vertex i
  return (sa * n.cross(c - b) + sb * n.cross(a - c) + sc * n.cross(b - a)) / area2;
}

/// FNV-1a over geometry bytes; keys the SDF cache.
inline std::uint64_t content_hash(const Mesh& mesh)
{
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& v : mesh.vertices) mix(v.data(), sizeof(double) * 3);
  for (const auto& t : mesh.triangles) mix(t.data(), sizeof(int) * 3);
  return h;
}

}  // namespace inversevis

#endif  // INVERSEVIS_MESH_HPP
