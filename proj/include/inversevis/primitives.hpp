#ifndef INVERSEVIS_PRIMITIVES_HPP
#define INVERSEVIS_PRIMITIVES_HPP

// Procedural meshes used by tests, the acceptance suite and the CLI's
// `builtin:` mesh names. All of them already sit inside [-1,1]^3.

#include "mesh.hpp"

#include <map>
#include <string>
#include <utility>

namespace inversevis::primitives {

namespace detail {

inline void set_height_scalars(Mesh& m)
{
  m.scalars.resize(m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) m.scalars[i] = 0.5 * (m.vertices[i].z() + 1.0);
}

/// Flips every triangle when the enclosed signed volume is negative.
inline void orient_outward(Mesh& m)
{
  double volume = 0.0;
  for (const auto& t : m.triangles) {
    volume += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]]));
  }
  if (volume < 0.0) {
    for (auto& t : m.triangles) std::swap(t[1], t[2]);
  }
}

/// Grid of (nu x nv) samples wrapped in both directions (torus topology).
template <typename F>
Mesh wrapped_grid(int nu, int nv, F&& point)
{
  Mesh m;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) m.vertices.push_back(point(2.0 * kPi * i / nu, 2.0 * kPi * j / nv));
  auto id = [nu, nv](int i, int j) { return ((i + nu) % nu) * nv + ((j + nv) % nv); };
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  orient_outward(m);
  set_height_scalars(m);
  return m;
}

}  // namespace detail

/// Subdivided icosahedron projected onto a sphere of the given radius.
/// Scalars default to (z+1)/2.
inline Mesh icosphere(double radius = 0.8, int subdivisions = 4)
{
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      int id = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Triangle> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      int a = mid(tri[0], tri[1]), b = mid(tri[1], tri[2]), c = mid(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  Mesh m;
  m.vertices.reserve(v.size());
  for (const auto& p : v) m.vertices.push_back(p * radius);
  m.triangles = std::move(f);
  detail::orient_outward(m);
  detail::set_height_scalars(m);
  return m;
}

/// Axis-aligned box centred at the origin, each face split into n x n quads.
inline Mesh box(const Vec3& half_extent = Vec3(0.8, 0.6, 0.4), int n = 8)
{
  Mesh m;
  // face = (normal axis, sign); u,v span the other two axes with u x v = outward normal
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {-1, 1}) {
      int ua = (axis + 1) % 3, va = (axis + 2) % 3;
      if (sign < 0) std::swap(ua, va);
      const int base = static_cast<int>(m.vertices.size());
      for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
          Vec3 p;
          p[axis] = sign * half_extent[axis];
          p[ua] = half_extent[ua] * (2.0 * i / n - 1.0);
          p[va] = half_extent[va] * (2.0 * j / n - 1.0);
          m.vertices.push_back(p);
        }
      }
      auto id = [&](int i, int j) { return base + i * (n + 1) + j; };
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
          m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
      }
    }
  }
  // Weld duplicated edge vertices so edge/vertex pseudo-normals see all faces.
  std::map<std::array<long long, 3>, int> weld;
  std::vector<int> remap(m.vertices.size());
  std::vector<Vec3> unique;
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    std::array<long long, 3> key{std::llround(m.vertices[i].x() * 1e9), std::llround(m.vertices[i].y() * 1e9),
                                 std::llround(m.vertices[i].z() * 1e9)};
    auto [it, inserted] = weld.emplace(key, static_cast<int>(unique.size()));
    if (inserted) unique.push_back(m.vertices[i]);
    remap[i] = it->second;
  }
  for (auto& t : m.triangles)
    for (int& idx : t) idx = remap[idx];
  m.vertices = std::move(unique);
  detail::orient_outward(m);
  detail::set_height_scalars(m);
  return m;
}

/// Ring torus around the z axis.
inline Mesh torus(double major = 0.65, double minor = 0.3, int nu = 96, int nv = 48)
{
  return detail::wrapped_grid(nu, nv, [=](double u, double v) {
    return Vec3((major + minor * std::cos(v)) * std::cos(u), (major + minor * std::cos(v)) * std::sin(u),
                minor * std::sin(v));
  });
}

/// Tube of the given radius swept along a (2,3) trefoil knot.
inline Mesh trefoil(double tube = 0.14, int nu = 240, int nv = 24)
{
  auto curve = [](double u) -> Vec3 {
    return Vec3(std::sin(u) + 2.0 * std::sin(2.0 * u), std::cos(u) - 2.0 * std::cos(2.0 * u), -std::sin(3.0 * u)) *
           0.28;
  };
  return detail::wrapped_grid(nu, nv, [=](double u, double v) {
    const double du = 1e-4;
    Vec3 c = curve(u);
    Vec3 t = (curve(u + du) - curve(u - du)).normalized();
    Vec3 ref = std::abs(t.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    Vec3 n = t.cross(ref).normalized();
    Vec3 b = t.cross(n);
    return Vec3(c + tube * (std::cos(v) * n + std::sin(v) * b));
  });
}

/// Star-shaped blob with deep concavities (radial displacement of a sphere).
inline Mesh blob(int subdivisions = 4)
{
  Mesh m = icosphere(1.0, subdivisions);
  for (auto& p : m.vertices) {
    const Vec3 d = p.normalized();
    const double r = 0.62 + 0.22 * std::sin(3.0 * d.x()) * std::cos(2.5 * d.y()) + 0.14 * std::cos(4.0 * d.z() + 1.0);
    p = d * r;
  }
  detail::set_height_scalars(m);
  return m;
}

/// Open square patch in the plane x = offset, spanning [-h,h]^2 in (y,z).
inline Mesh wall(double offset = 0.0, double half = 1.0, int n = 4)
{
  Mesh m;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) m.vertices.emplace_back(offset, half * (2.0 * i / n - 1.0), half * (2.0 * j / n - 1.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int a = i * (n + 1) + j;
      m.triangles.push_back({a, a + n + 1, a + n + 2});
      m.triangles.push_back({a, a + n + 2, a + 1});
    }
  }
  detail::set_height_scalars(m);
  return m;
}

inline Mesh single_triangle(const Vec3& a, const Vec3& b, const Vec3& c)
{
  Mesh m;
  m.vertices = {a, b, c};
  m.triangles = {{0, 1, 2}};
  m.scalars = {0.0, 0.5, 1.0};
  return m;
}

/// Resolves names like "sphere" or "torus" used by `builtin:<name>`.
inline Mesh by_name(const std::string& name)
{
  if (name == "sphere") return icosphere(0.8, 4);
  if (name == "box") return box();
  if (name == "torus") return torus();
  if (name == "trefoil") return trefoil();
  if (name == "blob") return blob();
  throw ConfigError("unknown builtin mesh '" + name + "'");
}

}  // namespace inversevis::primitives

#endif  // INVERSEVIS_PRIMITIVES_HPP
