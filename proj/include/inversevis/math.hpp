#ifndef INVERSEVIS_MATH_HPP
#define INVERSEVIS_MATH_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace inversevis {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Angle between two unit directions, in radians.
inline double angle_between(const Vec3& a, const Vec3& b)
{
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

/// Slab test against an axis-aligned box. Returns false when the ray misses;
/// otherwise writes the parametric entry/exit distances (entry clamped at 0).
inline bool clip_ray_to_box(const Vec3& origin, const Vec3& dir, double lo, double hi,
                            double& t_enter, double& t_exit)
{
  t_enter = 0.0;
  t_exit = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dir[k]) < 1e-300) {
      if (origin[k] < lo || origin[k] > hi) return false;
      continue;
    }
    double inv = 1.0 / dir[k];
    double t0 = (lo - origin[k]) * inv;
    double t1 = (hi - origin[k]) * inv;
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return false;
  }
  return true;
}

}  // namespace inversevis

#endif  // INVERSEVIS_MATH_HPP
