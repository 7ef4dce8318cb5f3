#ifndef INVERSEVIS_CAMERA_HPP
#define INVERSEVIS_CAMERA_HPP

#include "errors.hpp"
#include "math.hpp"

#include <cstdint>
#include <string>

namespace inversevis {

enum class Projection { orthographic, perspective };

inline Projection parse_projection(const std::string& s)
{
  if (s == "ortho" || s == "orthographic") return Projection::orthographic;
  if (s == "persp" || s == "perspective") return Projection::perspective;
  throw ConfigError("unknown projection '" + s + "'");
}

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
};

/// Camera on the sphere of radius 2.5 around the origin, looking at it.
/// +z is the pole; `right` = look x z, falling back to +x at the poles.
struct Camera {
  static constexpr double kRadius = 2.5;
  static constexpr double kNearHalfExtent = 1.25;

  double theta = kPi / 2;  // polar angle
  double phi_az = 0.0;     // azimuth
  double radius = kRadius;
  Projection projection = Projection::orthographic;
  double fov_y = deg_to_rad(45.0);

  Vec3 position = Vec3::Zero();
  Vec3 look = Vec3::Zero();
  Vec3 right = Vec3::Zero();
  Vec3 up = Vec3::Zero();

  /// Near-plane normal; identical to the look direction.
  const Vec3& near_plane_normal() const { return look; }

  /// World-space point on the near plane for an NDC coordinate.
  Vec3 near_plane_point(const Vec2& ndc) const
  {
    return position + kNearHalfExtent * (ndc.x() * right + ndc.y() * up);
  }

  /// NDC coordinate of a world point under this camera's projection.
  Vec2 project(const Vec3& x) const
  {
    const Vec3 d = x - position;
    if (projection == Projection::orthographic) {
      return {d.dot(right) / kNearHalfExtent, d.dot(up) / kNearHalfExtent};
    }
    const double z = d.dot(look);
    const double t = std::tan(0.5 * fov_y);
    return {d.dot(right) / (z * t), d.dot(up) / (z * t)};
  }
};

inline Camera make_camera(double theta, double phi_az, Projection projection = Projection::orthographic)
{
  if (!std::isfinite(theta) || !std::isfinite(phi_az)) throw ConfigError("camera angles must be finite");
  Camera cam;
  cam.theta = theta;
  cam.phi_az = phi_az;
  cam.projection = projection;
  const double st = std::sin(theta);
  cam.position = Camera::kRadius * Vec3(st * std::cos(phi_az), st * std::sin(phi_az), std::cos(theta));
  cam.look = -cam.position.normalized();
  Vec3 r = cam.look.cross(Vec3::UnitZ());
  cam.right = r.norm() < 1e-9 ? Vec3(Vec3::UnitX()) : Vec3(r.normalized());
  cam.up = cam.right.cross(cam.look).normalized();
  return cam;
}

/// NDC centre of pixel (px, py); row 0 is the top of the image.
inline Vec2 pixel_ndc(int px, int py, int width, int height)
{
  return {(px + 0.5) / width * 2.0 - 1.0, 1.0 - (py + 0.5) / height * 2.0};
}

inline Ray pixel_ray(const Camera& cam, const Vec2& ndc)
{
  if (cam.projection == Projection::orthographic) {
    return {cam.near_plane_point(ndc), cam.look};
  }
  const double t = std::tan(0.5 * cam.fov_y);
  const Vec3 dir = (cam.look + t * (ndc.x() * cam.right + ndc.y() * cam.up)).normalized();
  return {cam.position, dir};
}

enum class PixelClass : std::uint8_t { none, direct, indirect };

inline const char* to_string(PixelClass c)
{
  switch (c) {
    case PixelClass::none: return "none";
    case PixelClass::direct: return "direct";
    case PixelClass::indirect: return "indirect";
  }
  return "?";
}

}  // namespace inversevis

#endif  // INVERSEVIS_CAMERA_HPP
