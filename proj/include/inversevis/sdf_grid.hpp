#ifndef INVERSEVIS_SDF_GRID_HPP
#define INVERSEVIS_SDF_GRID_HPP

#include "bvh.hpp"
#include "errors.hpp"
#include "mesh.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <unordered_map>
#include <vector>

namespace inversevis {

/// A point on the mesh surface with its scalar.
struct SurfacePoint {
  Vec3 position = Vec3::Zero();
  int triangle = -1;
  Vec3 bary = Vec3::Zero();
  double scalar = 0.0;
};

/// Voxelized signed distance field over the cube [lo, hi]^3, positive
/// outside the surface. Every voxel (sampled at its centre) also stores the
/// closest triangle and the barycentric coordinates of the closest point.
class SdfGrid {
public:
  static constexpr double kDefaultLo = -2.5;
  static constexpr double kDefaultHi = 2.5;

  SdfGrid() = default;
  SdfGrid(int resolution, double lo = kDefaultLo, double hi = kDefaultHi)
      : res_(resolution), lo_(lo), hi_(hi), voxel_((hi - lo) / resolution)
  {
    const std::size_t n = voxel_count();
    distance_.assign(n, 0.0f);
    triangle_.assign(n, -1);
    bary_.assign(3 * n, 0.0f);
  }

  int resolution() const { return res_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double voxel_size() const { return voxel_; }
  double voxel_diagonal() const { return voxel_ * std::sqrt(3.0); }
  std::size_t voxel_count() const { return static_cast<std::size_t>(res_) * res_ * res_; }
  std::uint64_t mesh_hash() const { return mesh_hash_; }
  void set_mesh_hash(std::uint64_t h) { mesh_hash_ = h; }

  std::size_t index(int i, int j, int k) const
  {
    return (static_cast<std::size_t>(k) * res_ + j) * res_ + i;
  }
  Vec3 center(int i, int j, int k) const
  {
    return {lo_ + (i + 0.5) * voxel_, lo_ + (j + 0.5) * voxel_, lo_ + (k + 0.5) * voxel_};
  }
  Vec3 center(std::size_t idx) const
  {
    const int i = static_cast<int>(idx % res_);
    const int j = static_cast<int>((idx / res_) % res_);
    const int k = static_cast<int>(idx / (static_cast<std::size_t>(res_) * res_));
    return center(i, j, k);
  }

  bool contains(const Vec3& x) const
  {
    return x.minCoeff() >= lo_ && x.maxCoeff() <= hi_;
  }

  float distance_at(std::size_t idx) const { return distance_[idx]; }
  int triangle_at(std::size_t idx) const { return triangle_[idx]; }
  Vec3 bary_at(std::size_t idx) const
  {
    return {bary_[3 * idx], bary_[3 * idx + 1], bary_[3 * idx + 2]};
  }
  void set_voxel(std::size_t idx, float d, int tri, const Vec3& bary)
  {
    distance_[idx] = d;
    triangle_[idx] = tri;
    bary_[3 * idx] = static_cast<float>(bary[0]);
    bary_[3 * idx + 1] = static_cast<float>(bary[1]);
    bary_[3 * idx + 2] = static_cast<float>(bary[2]);
  }

  /// Continuous voxel coordinate of x along one axis (voxel centres at integers).
  double voxel_coord(double x) const { return (x - lo_) / voxel_ - 0.5; }

  /// Voxel whose centre is nearest to x (clamped into the grid).
  std::size_t nearest_voxel(const Vec3& x) const
  {
    int c[3];
    for (int a = 0; a < 3; ++a) c[a] = std::clamp(static_cast<int>(std::lround(voxel_coord(x[a]))), 0, res_ - 1);
    return index(c[0], c[1], c[2]);
  }

  /// Trilinear interpolation of the eight surrounding voxel distances.
  /// Points beyond the outermost voxel centres are clamped; `extrapolated`
  /// then reports true.
  double sample(const Vec3& x, bool* extrapolated = nullptr) const
  {
    int i0[3];
    double f[3];
    bool ext = false;
    for (int a = 0; a < 3; ++a) {
      double u = voxel_coord(x[a]);
      if (!(u >= 0.0)) {
        ext = true;
        u = 0.0;
      } else if (u > res_ - 1) {
        ext = true;
        u = res_ - 1;
      }
      int i = static_cast<int>(u);
      if (i > res_ - 2) i = res_ - 2;
      i0[a] = i;
      f[a] = u - i;
    }
    if (extrapolated) *extrapolated = ext;
    const std::size_t sx = 1, sy = res_, sz = static_cast<std::size_t>(res_) * res_;
    const float* d = distance_.data() + index(i0[0], i0[1], i0[2]);
    const double c00 = d[0] + f[0] * (d[sx] - d[0]);
    const double c10 = d[sy] + f[0] * (d[sy + sx] - d[sy]);
    const double c01 = d[sz] + f[0] * (d[sz + sx] - d[sz]);
    const double c11 = d[sz + sy] + f[0] * (d[sz + sy + sx] - d[sz + sy]);
    const double c0 = c00 + f[1] * (c10 - c00);
    const double c1 = c01 + f[1] * (c11 - c01);
    return c0 + f[2] * (c1 - c0);
  }

  /// Central differences of `sample` with a spacing of one voxel. Falls back
  /// to one-sided differences (and sets `one_sided`) near the boundary.
  Vec3 gradient(const Vec3& x, bool* one_sided = nullptr) const
  {
    const double h = voxel_;
    const double inner_lo = lo_ + 0.5 * voxel_, inner_hi = hi_ - 0.5 * voxel_;
    Vec3 g;
    bool flagged = false;
    for (int a = 0; a < 3; ++a) {
      Vec3 xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      const bool up_ok = xp[a] <= inner_hi, down_ok = xm[a] >= inner_lo;
      if (up_ok && down_ok) {
        g[a] = (sample(xp) - sample(xm)) / (2.0 * h);
      } else if (up_ok) {
        flagged = true;
        g[a] = (sample(xp) - sample(x)) / h;
      } else {
        flagged = true;
        g[a] = (sample(x) - sample(xm)) / h;
      }
    }
    if (one_sided) *one_sided = flagged;
    return g;
  }

  /// Central differences (spacing one voxel) of `gradient`, symmetrized. The
  /// diagonal therefore spans two voxels each way, which keeps the Hessian
  /// consistent with differentiating the sampled gradient.
  Mat3 hessian(const Vec3& x, bool* one_sided = nullptr) const
  {
    const double h = voxel_;
    Vec3 c = x;
    bool flagged = false;
    // shift the stencil inward so every sample lies on interpolated data
    const double inner_lo = lo_ + 0.5 * voxel_ + 2.0 * h, inner_hi = hi_ - 0.5 * voxel_ - 2.0 * h;
    for (int a = 0; a < 3; ++a) {
      if (c[a] < inner_lo) {
        c[a] = inner_lo;
        flagged = true;
      } else if (c[a] > inner_hi) {
        c[a] = inner_hi;
        flagged = true;
      }
    }
    if (one_sided) *one_sided = flagged;
    const double f0 = sample(c);
    Mat3 H;
    for (int a = 0; a < 3; ++a) {
      Vec3 ea = Vec3::Zero();
      ea[a] = h;
      H(a, a) = (sample(c + 2.0 * ea) - 2.0 * f0 + sample(c - 2.0 * ea)) / (4.0 * h * h);
      for (int b = a + 1; b < 3; ++b) {
        Vec3 eb = Vec3::Zero();
        eb[b] = h;
        const double v = (sample(c + ea + eb) - sample(c + ea - eb) - sample(c - ea + eb) + sample(c - ea - eb)) /
                         (4.0 * h * h);
        H(a, b) = v;
        H(b, a) = v;
      }
    }
    return 0.5 * (H + H.transpose());
  }

private:
  int res_ = 0;
  double lo_ = kDefaultLo, hi_ = kDefaultHi, voxel_ = 0.0;
  std::uint64_t mesh_hash_ = 0;
  std::vector<float> distance_;
  std::vector<int> triangle_;
  std::vector<float> bary_;
};

/// Angle-weighted pseudo-normals (face, edge, vertex) used to sign distances.
class PseudoNormals {
public:
  explicit PseudoNormals(const Mesh& mesh) : mesh_(&mesh)
  {
    face_.resize(mesh.triangles.size());
    vertex_.assign(mesh.vertices.size(), Vec3::Zero());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      const Vec3 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
      Vec3 n = (b - a).cross(c - a);
      const double len = n.norm();
      n = len > 0 ? Vec3(n / len) : Vec3::Zero();
      face_[t] = n;
      const Vec3 p[3] = {a, b, c};
      for (int k = 0; k < 3; ++k) {
        const Vec3 e1 = p[(k + 1) % 3] - p[k], e2 = p[(k + 2) % 3] - p[k];
        const double n1 = e1.norm(), n2 = e2.norm();
        if (n1 > 0 && n2 > 0) {
          const double angle = std::acos(std::clamp(e1.dot(e2) / (n1 * n2), -1.0, 1.0));
          vertex_[tri[k]] += angle * n;
        }
        edge_.try_emplace(edge_key(tri[k], tri[(k + 1) % 3]), Vec3::Zero()).first->second += n;
      }
    }
  }

  Vec3 normal(int tri, TriangleFeature f) const
  {
    const auto& t = mesh_->triangles[tri];
    switch (f) {
      case TriangleFeature::face: return face_[tri];
      case TriangleFeature::vertex0: return vertex_[t[0]];
      case TriangleFeature::vertex1: return vertex_[t[1]];
      case TriangleFeature::vertex2: return vertex_[t[2]];
      case TriangleFeature::edge01: return edge_.at(edge_key(t[0], t[1]));
      case TriangleFeature::edge12: return edge_.at(edge_key(t[1], t[2]));
      case TriangleFeature::edge20: return edge_.at(edge_key(t[2], t[0]));
    }
    return face_[tri];
  }

  /// +1 outside, -1 inside, relative to the closest point on `tri`.
  double sign(const Vec3& p, int tri, const ClosestPoint& cp) const
  {
    const double s = (p - cp.point).dot(normal(tri, cp.feature));
    return s < 0.0 ? -1.0 : 1.0;
  }

private:
  static std::uint64_t edge_key(int a, int b)
  {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }

  const Mesh* mesh_;
  std::vector<Vec3> face_;
  std::vector<Vec3> vertex_;
  std::unordered_map<std::uint64_t, Vec3> edge_;
};

enum class ClosestSearch { bvh, brute_force };

/// Exact signed point-to-mesh distance at every voxel centre, plus the
/// closest triangle and its barycentric coordinates.
inline SdfGrid build_grid(const Mesh& mesh, int resolution, ClosestSearch search = ClosestSearch::bvh,
                          double lo = SdfGrid::kDefaultLo, double hi = SdfGrid::kDefaultHi)
{
  if (resolution < 8) throw ConfigError("SDF resolution must be at least 8");
  if (mesh.triangles.empty()) throw ConfigError("cannot build an SDF from an empty mesh");
  mesh.validate();

  SdfGrid grid(resolution, lo, hi);
  grid.set_mesh_hash(content_hash(mesh));
  const PseudoNormals normals(mesh);
  const TriangleBvh bvh(mesh);

#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < resolution; ++k) {
    int hint = -1;
    for (int j = 0; j < resolution; ++j) {
      for (int i = 0; i < resolution; ++i) {
        const Vec3 p = grid.center(i, j, k);
        const TriangleQuery q = search == ClosestSearch::bvh ? bvh.closest(p, hint) : closest_triangle_brute_force(mesh, p);
        hint = q.triangle;
        const double d = std::sqrt(q.closest.distance_sq) * normals.sign(p, q.triangle, q.closest);
        grid.set_voxel(grid.index(i, j, k), static_cast<float>(d), q.triangle, q.closest.bary);
      }
    }
  }
  return grid;
}

/// Resolves the surface point near x from the voxel payload: the closest
/// triangles stored at the surrounding voxels are re-queried exactly and the
/// nearest one wins.
inline SurfacePoint surface_point_at(const SdfGrid& grid, const Mesh& mesh, const Vec3& x, double tolerance)
{
  if (!(std::abs(grid.sample(x)) <= tolerance)) throw NumericalError("not on surface");
  int base[3];
  for (int a = 0; a < 3; ++a) {
    base[a] = std::clamp(static_cast<int>(std::floor(grid.voxel_coord(x[a]))), 0, grid.resolution() - 2);
  }
  int candidates[9];
  int n = 0;
  candidates[n++] = grid.triangle_at(grid.nearest_voxel(x));
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) candidates[n++] = grid.triangle_at(grid.index(base[0] + di, base[1] + dj, base[2] + dk));

  SurfacePoint best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < n; ++c) {
    const int t = candidates[c];
    if (t < 0 || t == best.triangle) continue;
    auto cp = closest_point_on_triangle(x, mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    if (cp.distance_sq < best_d) {
      best_d = cp.distance_sq;
      best.position = cp.point;
      best.triangle = t;
      best.bary = cp.bary;
    }
  }
  if (best.triangle < 0) throw NumericalError("not on surface");
  best.scalar = mesh.scalars.empty() ? 0.0 : barycentric_scalar(mesh, best.triangle, best.bary);
  return best;
}

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value)
{
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  char bytes[sizeof(U)];
  for (std::size_t b = 0; b < sizeof(U); ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  out.write(bytes, sizeof(U));
}

template <typename T>
T get_le(std::istream& in)
{
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char bytes[sizeof(U)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(U));
  if (!in) throw IoError("truncated SDF cache");
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(bytes[b]) << (8 * b);
  return std::bit_cast<T>(bits);
}

inline constexpr char kCacheMagic[8] = {'I', 'V', 'S', 'D', 'F', '0', '0', '1'};

}  // namespace detail

/// Binary cache: magic "IVSDF001", u64 mesh hash, f64 lo, f64 hi,
/// u32 resolution, then per voxel (x fastest) f32 distance, i32 triangle,
/// 3 x f32 barycentric weights. Little-endian throughout.
inline void save_grid_cache(const SdfGrid& grid, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write SDF cache " + path.string());
  out.write(detail::kCacheMagic, 8);
  detail::put_le<std::uint64_t>(out, grid.mesh_hash());
  detail::put_le<double>(out, grid.lo());
  detail::put_le<double>(out, grid.hi());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.resolution()));
  for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
    detail::put_le<float>(out, grid.distance_at(v));
    detail::put_le<std::int32_t>(out, grid.triangle_at(v));
    const Vec3 b = grid.bary_at(v);
    for (int k = 0; k < 3; ++k) detail::put_le<float>(out, static_cast<float>(b[k]));
  }
  if (!out) throw IoError("failed writing SDF cache " + path.string());
}

/// Returns nothing when the file is absent or was built for a different
/// mesh or resolution.
inline std::optional<SdfGrid> load_grid_cache(const std::filesystem::path& path, std::uint64_t expected_hash,
                                              int expected_resolution)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(magic, magic + 8, detail::kCacheMagic)) return std::nullopt;
  const auto hash = detail::get_le<std::uint64_t>(in);
  const auto lo = detail::get_le<double>(in);
  const auto hi = detail::get_le<double>(in);
  const auto res = static_cast<int>(detail::get_le<std::uint32_t>(in));
  if (hash != expected_hash || res != expected_resolution) return std::nullopt;
  SdfGrid grid(res, lo, hi);
  grid.set_mesh_hash(hash);
  std::vector<char> raw(grid.voxel_count() * 20);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!in) return std::nullopt;
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[off + b])) << (8 * b);
    return v;
  };
  for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
    const std::size_t off = v * 20;
    grid.set_voxel(v, std::bit_cast<float>(u32(off)), std::bit_cast<std::int32_t>(u32(off + 4)),
                   Vec3(std::bit_cast<float>(u32(off + 8)), std::bit_cast<float>(u32(off + 12)),
                        std::bit_cast<float>(u32(off + 16))));
  }
  return grid;
}

/// Loads the grid from `cache` when it matches the mesh, otherwise builds
/// it (and writes the cache if a path was given).
inline SdfGrid load_or_build_grid(const Mesh& mesh, int resolution,
                                  const std::optional<std::filesystem::path>& cache = std::nullopt)
{
  if (cache) {
    if (auto grid = load_grid_cache(*cache, content_hash(mesh), resolution)) return std::move(*grid);
  }
  SdfGrid grid = build_grid(mesh, resolution);
  if (cache) save_grid_cache(grid, *cache);
  return grid;
}

}  // namespace inversevis

#endif  // INVERSEVIS_SDF_GRID_HPP
