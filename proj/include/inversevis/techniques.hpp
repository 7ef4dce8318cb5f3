#ifndef INVERSEVIS_TECHNIQUES_HPP
#define INVERSEVIS_TECHNIQUES_HPP

// Pixel-to-surface mappings for pixels whose straight ray misses the
// surface: the ring projection, the quadratic mirror, and hull-seeded
// curved rays.

#include "camera.hpp"
#include "ray_engine.hpp"
#include "scene.hpp"

#include <array>
#include <optional>
#include <string>
#include <variant>

namespace inversevis {

struct DirectOnly {};

/// Ring projection around the back-projected centre. r1 <= 0 means "use
/// the object's silhouette radius".
struct NeugebauerParams {
  Vec3 center = Vec3::Zero();
  double r1 = -1.0;
  double r2 = 1.0;
};

/// Quadratic height field z = w1 x^2 + w2 y^2 + w3 xy + w4 x + w5 y placed
/// behind the object.
struct MirrorParams {
  std::array<double, 5> omega{};
  double offset = 1.0;
  double half_extent = 2.0;
};

struct InverseVisParams {
  double alpha = 0.5;
  double phi0 = 0.4;
};

using TechniqueParams = std::variant<DirectOnly, NeugebauerParams, MirrorParams, InverseVisParams>;

inline std::string technique_name(const TechniqueParams& t)
{
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DirectOnly>) return "direct";
        else if constexpr (std::is_same_v<T, NeugebauerParams>) return "neugebauer";
        else if constexpr (std::is_same_v<T, MirrorParams>) return "mirror";
        else return "inversevis";
      },
      t);
}

inline TechniqueParams default_technique(const std::string& name)
{
  if (name == "direct") return DirectOnly{};
  if (name == "neugebauer") return NeugebauerParams{};
  if (name == "mirror") return MirrorParams{};
  if (name == "inversevis") return InverseVisParams{};
  throw ConfigError("unknown technique '" + name + "'");
}

inline void validate(const TechniqueParams& t)
{
  if (auto* n = std::get_if<NeugebauerParams>(&t)) {
    if (n->r1 > 0.0 && !(n->r1 < n->r2)) throw ConfigError("ring radii must satisfy 0 < r1 < r2");
    if (!(n->r2 > 0.0) || n->r2 > std::sqrt(2.0) + 1e-12) throw ConfigError("outer ring radius must lie in (0, sqrt 2]");
  } else if (auto* m = std::get_if<MirrorParams>(&t)) {
    if (!(m->offset > 0.0)) throw ConfigError("mirror offset must be positive");
    if (!(m->half_extent > 0.0)) throw ConfigError("mirror extent must be positive");
  } else if (auto* iv = std::get_if<InverseVisParams>(&t)) {
    if (!(iv->alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (!(iv->phi0 > 0.0)) throw ConfigError("hull isovalue must be positive");
  }
}

/// A pixel's resolved surface point.
struct Hit {
  bool found = false;
  SurfacePoint point;
  double ray_length = 0.0;
  int steps = 0;
  Vec3 dP_dalpha = Vec3::Zero();
};

/// Straight trace resolved against the mesh (snapped to the closest point
/// of the payload triangles).
inline Hit trace_straight(const Scene& scene, const Ray& ray)
{
  Hit hit;
  const RayHit r = sphere_trace(scene.grid, ray, scene.trace);
  hit.steps = r.steps;
  hit.ray_length = r.ray_length;
  if (!r.found) return hit;
  hit.point = surface_point_at(scene.grid, scene.mesh, r.position, scene.trace.hit_tolerance);
  hit.found = true;
  return hit;
}

// ---------------------------------------------------------------------------
// Ring projection
// ---------------------------------------------------------------------------

/// Largest NDC distance of any vertex from the projected centre.
inline double silhouette_radius(const Mesh& mesh, const Camera& cam, const Vec3& center)
{
  const Vec2 c = cam.project(center);
  double r = 0.0;
  for (const auto& v : mesh.vertices) r = std::max(r, (cam.project(v) - c).norm());
  return r;
}

/// Fills in an automatic inner radius.
inline NeugebauerParams resolve_ring(const NeugebauerParams& p, const Mesh& mesh, const Camera& cam)
{
  NeugebauerParams out = p;
  if (out.r1 <= 0.0) out.r1 = std::min(silhouette_radius(mesh, cam, p.center), 0.99 * p.r2);
  return out;
}

/// Straight ray from the centre: radial in-plane direction blended with the
/// near-plane normal by (2 r / (r1 + r2) - 1). Nothing outside the ring.
inline std::optional<Ray> ring_ray(const Camera& cam, const Vec2& ndc, const NeugebauerParams& p)
{
  const Vec2 offset = ndc - cam.project(p.center);
  const double r = offset.norm();
  if (r < p.r1 || r > p.r2 || r == 0.0) return std::nullopt;
  const Vec3 radial = ((offset.x() * cam.right + offset.y() * cam.up) / r).normalized();
  const double blend = 2.0 * r / (p.r1 + p.r2) - 1.0;
  return Ray{p.center, (radial + blend * cam.near_plane_normal()).normalized()};
}

/// `params` must already be resolved (see resolve_ring).
inline std::optional<Hit> neugebauer_map(const Scene& scene, const Camera& cam, const Vec2& ndc,
                                         const NeugebauerParams& params)
{
  auto ray = ring_ray(cam, ndc, params);
  if (!ray) return std::nullopt;
  return trace_straight(scene, *ray);
}

// ---------------------------------------------------------------------------
// Quadratic mirror
// ---------------------------------------------------------------------------

struct MirrorSample {
  double height = 0.0;
  Vec3 normal = Vec3::UnitZ();  // unit, local frame
};

inline MirrorSample mirror_surface(const MirrorParams& m, double x, double y)
{
  const auto& w = m.omega;
  MirrorSample s;
  s.height = w[0] * x * x + w[1] * y * y + w[2] * x * y + w[3] * x + w[4] * y;
  s.normal = Vec3(-2.0 * w[0] * x - w[2] * y - w[3], -2.0 * w[1] * y - w[2] * x - w[4], 1.0).normalized();
  return s;
}

/// Local mirror frame: x = camera right, y = camera up, z = towards the
/// camera; origin behind the object centre at sqrt(3) + offset.
struct MirrorFrame {
  Vec3 origin, ex, ey, ez;

  Vec3 to_local(const Vec3& p) const
  {
    const Vec3 d = p - origin;
    return {d.dot(ex), d.dot(ey), d.dot(ez)};
  }
  Vec3 dir_to_local(const Vec3& d) const { return {d.dot(ex), d.dot(ey), d.dot(ez)}; }
  Vec3 to_world(const Vec3& l) const { return origin + l.x() * ex + l.y() * ey + l.z() * ez; }
  Vec3 dir_to_world(const Vec3& l) const { return l.x() * ex + l.y() * ey + l.z() * ez; }
};

inline MirrorFrame mirror_frame(const Camera& cam, const MirrorParams& m, const Vec3& object_center = Vec3::Zero())
{
  return {object_center + cam.look * (std::sqrt(3.0) + m.offset), cam.right, cam.up, -cam.look};
}

/// Ray / height-field intersection, solved in closed form (the constraint
/// is quadratic along a ray). Returns the local (x, y, z) point.
inline std::optional<Vec3> intersect_mirror(const MirrorFrame& frame, const MirrorParams& m, const Ray& ray)
{
  const Vec3 o = frame.to_local(ray.origin), d = frame.dir_to_local(ray.direction);
  const auto& w = m.omega;
  const double qa = -(w[0] * d.x() * d.x() + w[1] * d.y() * d.y() + w[2] * d.x() * d.y());
  const double qb = d.z() - (2.0 * w[0] * o.x() * d.x() + 2.0 * w[1] * o.y() * d.y() +
                             w[2] * (o.x() * d.y() + o.y() * d.x()) + w[3] * d.x() + w[4] * d.y());
  const double qc = o.z() - mirror_surface(m, o.x(), o.y()).height;

  double roots[2];
  int n = 0;
  if (std::abs(qa) < 1e-14) {
    if (std::abs(qb) < 1e-14) return std::nullopt;
    roots[n++] = -qc / qb;
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    // numerically stable pair
    const double q = -0.5 * (qb + (qb >= 0 ? sq : -sq));
    roots[n++] = q / qa;
    if (q != 0.0) roots[n++] = qc / q;
  }
  std::sort(roots, roots + n);
  for (int i = 0; i < n; ++i) {
    if (roots[i] <= 1e-9) continue;
    const Vec3 p = o + roots[i] * d;
    if (std::abs(p.x()) <= m.half_extent && std::abs(p.y()) <= m.half_extent) return p;
  }
  return std::nullopt;
}

/// The secondary ray starts on the mirror and follows its unit normal.
inline std::optional<Ray> mirror_ray(const Camera& cam, const Ray& primary, const MirrorParams& m)
{
  const MirrorFrame frame = mirror_frame(cam, m);
  auto local = intersect_mirror(frame, m, primary);
  if (!local) return std::nullopt;
  const MirrorSample s = mirror_surface(m, local->x(), local->y());
  return Ray{frame.to_world(*local), frame.dir_to_world(s.normal).normalized()};
}

inline std::optional<Hit> mirror_map(const Scene& scene, const Camera& cam, const Ray& primary, const MirrorParams& m)
{
  auto secondary = mirror_ray(cam, primary, m);
  if (!secondary) return std::nullopt;
  return trace_straight(scene, *secondary);
}

// ---------------------------------------------------------------------------
// Hull-seeded curved rays
// ---------------------------------------------------------------------------

/// Camera-far hull crossing and the field gradient there. Independent of
/// alpha, so renders that only vary alpha can reuse it.
struct HullSeed {
  Vec3 point;
  Vec3 gradient;
  Vec3 view_dir;
};

inline std::optional<HullSeed> hull_seed(const Scene& scene, const Ray& primary, double phi0)
{
  auto p = farthest_hull_hit(scene.grid, primary, phi0, scene.trace);
  if (!p) return std::nullopt;
  return HullSeed{*p, scene.grid.gradient(*p), primary.direction};
}

inline Hit inversevis_from_seed(const Scene& scene, const HullSeed& seed, double alpha, bool want_alpha_gradient)
{
  Hit hit;
  const Vec3 v0 = seed_velocity(seed.gradient, seed.view_dir, alpha, scene.trace.degenerate_speed);
  const Vec3 dv0 = seed_velocity_alpha_derivative(seed.gradient, seed.view_dir);
  const CurvedLanding land = curved_land(scene.grid, seed.point, v0, scene.trace, want_alpha_gradient ? &dv0 : nullptr);
  hit.steps = land.steps;
  if (land.terminal != Terminal::surface_hit) return hit;
  hit.point = surface_point_at(scene.grid, scene.mesh, land.position, scene.trace.hit_tolerance);
  hit.found = true;
  hit.dP_dalpha = land.dP_dalpha;
  return hit;
}

inline std::optional<Hit> inversevis_map(const Scene& scene, const Ray& primary, const InverseVisParams& p,
                                         bool want_alpha_gradient = false)
{
  auto seed = hull_seed(scene, primary, p.phi0);
  if (!seed) return std::nullopt;
  return inversevis_from_seed(scene, *seed, p.alpha, want_alpha_gradient);
}

}  // namespace inversevis

#endif  // INVERSEVIS_TECHNIQUES_HPP
