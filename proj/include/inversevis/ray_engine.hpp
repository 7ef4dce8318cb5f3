#ifndef INVERSEVIS_RAY_ENGINE_HPP
#define INVERSEVIS_RAY_ENGINE_HPP

#include "camera.hpp"
#include "errors.hpp"
#include "sdf_grid.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <optional>
#include <vector>

namespace inversevis {

struct TraceSettings {
  double hit_tolerance = 1e-3;
  int straight_max_steps = 1024;
  double step_size = 0.1;        // h of the curved integrator
  int curved_max_steps = 2000;
  double escape_radius = 2.4;
  int stall_window = 50;
  double stall_decrease = 1e-6;
  double degenerate_speed = 1e-5;
  int hull_bisection_steps = 20;
};

enum class Terminal : std::uint8_t { surface_hit, escaped, max_steps, stalled };

inline const char* to_string(Terminal t)
{
  switch (t) {
    case Terminal::surface_hit: return "surface_hit";
    case Terminal::escaped: return "escaped";
    case Terminal::max_steps: return "max_steps";
    case Terminal::stalled: return "stalled";
  }
  return "?";
}

/// Result of a straight sphere trace, before it is resolved against the mesh.
struct RayHit {
  bool found = false;
  Vec3 position = Vec3::Zero();
  double ray_length = 0.0;
  int steps = 0;
  Terminal terminal = Terminal::escaped;
};

namespace detail {

/// Entry/exit of the ray inside the region where the grid interpolates.
inline bool clip_to_grid(const SdfGrid& grid, const Ray& ray, double& t0, double& t1)
{
  const double margin = 0.5 * grid.voxel_size();
  return clip_ray_to_box(ray.origin, ray.direction, grid.lo() + margin, grid.hi() - margin, t0, t1);
}

}  // namespace detail

/// Marches x <- x + |phi(x)| * dir until |phi| <= tolerance, the ray leaves
/// the grid, or the step budget runs out. Works from either side of the
/// surface.
inline RayHit sphere_trace(const SdfGrid& grid, const Ray& ray, const TraceSettings& s = {})
{
  RayHit hit;
  double t = 0.0, t_exit = 0.0;
  if (!detail::clip_to_grid(grid, ray, t, t_exit)) return hit;
  const double t_start = t;
  for (int step = 0; step < s.straight_max_steps; ++step) {
    const Vec3 x = ray.origin + t * ray.direction;
    const double d = grid.sample(x);
    hit.steps = step;
    if (std::abs(d) <= s.hit_tolerance) {
      hit.found = true;
      hit.position = x;
      hit.ray_length = t - t_start;
      hit.terminal = Terminal::surface_hit;
      return hit;
    }
    t += std::abs(d);
    if (t > t_exit) {
      hit.terminal = Terminal::escaped;
      return hit;
    }
  }
  hit.terminal = Terminal::stalled;
  return hit;
}

/// Farthest crossing of the ray with the isosurface phi = phi0, refined by
/// bisection. Returns nothing when the ray never crosses it.
inline std::optional<Vec3> farthest_hull_hit(const SdfGrid& grid, const Ray& ray, double phi0,
                                             const TraceSettings& s = {})
{
  if (!(phi0 > 0.0)) throw ConfigError("hull isovalue must be positive");
  double t = 0.0, t_exit = 0.0;
  if (!detail::clip_to_grid(grid, ray, t, t_exit)) return std::nullopt;
  const double min_step = 0.25 * grid.voxel_size();
  auto g = [&](double tt) { return grid.sample(ray.origin + tt * ray.direction) - phi0; };

  double prev_t = t, prev_g = g(t);
  std::optional<std::pair<double, double>> bracket;
  while (prev_t < t_exit) {
    const double next_t = std::min(t_exit, prev_t + std::max(std::abs(prev_g), min_step));
    const double next_g = g(next_t);
    if ((prev_g > 0.0) != (next_g > 0.0)) bracket = {prev_t, next_t};
    prev_t = next_t;
    prev_g = next_g;
  }
  if (!bracket) return std::nullopt;

  auto [a, b] = *bracket;
  const bool a_positive = g(a) > 0.0;
  for (int i = 0; i < s.hull_bisection_steps; ++i) {
    const double m = 0.5 * (a + b);
    if ((g(m) > 0.0) == a_positive) a = m;
    else b = m;
  }
  return Vec3(ray.origin + 0.5 * (a + b) * ray.direction);
}

/// Initial velocity alpha * g x (r x g), with g = grad phi at the seed and r
/// the view direction. Returns zero when the result is shorter than
/// `degenerate_speed`; the tracer then falls straight down -grad phi.
inline Vec3 seed_velocity(const Vec3& gradient, const Vec3& view_dir, double alpha, double degenerate_speed = 1e-5)
{
  const Vec3 v = alpha * gradient.cross(view_dir.cross(gradient));
  if (v.norm() < degenerate_speed) return Vec3::Zero();
  return v;
}

inline Vec3 seed_velocity(const SdfGrid& grid, const Vec3& hull_point, const Vec3& view_dir, double alpha,
                          const TraceSettings& s = {})
{
  return seed_velocity(grid.gradient(hull_point), view_dir, alpha, s.degenerate_speed);
}

/// d v0 / d alpha: the seed velocity is linear in alpha.
inline Vec3 seed_velocity_alpha_derivative(const Vec3& gradient, const Vec3& view_dir)
{
  return gradient.cross(view_dir.cross(gradient));
}

/// Jacobian of the phase flow F(p, v) = (phi(p) v/|v|, -grad phi(p)):
///   [ (v/|v|) grad^T      phi (I/|v| - v v^T/|v|^3) ]
///   [ -H_phi                       0                 ]
inline Mat6 jacobian_from_samples(double phi, const Vec3& grad, const Mat3& hess, const Vec3& v)
{
  const double speed = v.norm();
  if (speed < 1e-8) throw NumericalError("velocity-normalization singularity");
  const Vec3 u = v / speed;
  Mat6 J = Mat6::Zero();
  J.block<3, 3>(0, 0) = u * grad.transpose();
  J.block<3, 3>(0, 3) = phi * (Mat3::Identity() / speed - v * v.transpose() / (speed * speed * speed));
  J.block<3, 3>(3, 0) = -hess;
  return J;
}

inline Mat6 jacobian_at(const SdfGrid& grid, const Vec3& p, const Vec3& v)
{
  if (v.norm() < 1e-8) throw NumericalError("velocity-normalization singularity");
  return jacobian_from_samples(grid.sample(p), grid.gradient(p), grid.hessian(p), v);
}

/// Phase flow F(x) for a 6-vector state (p, v).
inline Vec6 phase_flow(const SdfGrid& grid, const Vec6& state)
{
  const Vec3 p = state.head<3>(), v = state.tail<3>();
  Vec6 f;
  f.head<3>() = grid.sample(p) * v / v.norm();
  f.tail<3>() = -grid.gradient(p);
  return f;
}

struct PhaseState {
  Vec3 p;
  Vec3 v;
};

struct CurvedTrajectory {
  std::vector<PhaseState> states;
  double step_size = 0.1;
  std::vector<Mat6> jacobians;  // J(t_i) for each step taken, when requested
  Terminal terminal = Terminal::max_steps;
  bool degenerate = false;      // started with v0 = 0 (fall-line mode)

  int steps() const { return static_cast<int>(states.size()) - 1; }
  const Vec3& end_point() const { return states.back().p; }
};

/// Integrates dp/dt = phi(p) v/|v|, dv/dt = -grad phi(p) with symplectic
/// Euler:
///   v_{i+1} = v_i - h grad phi(p_i)
///   p_{i+1} = p_i + h phi(p_i) v_{i+1}/|v_{i+1}|
/// With v0 = 0 the position instead follows the fall line
///   p_{i+1} = p_i - h phi(p_i) grad/|grad|.
/// `observe(i, p, v, phi, grad)` sees every state that is stepped from.
template <typename Observer>
Terminal integrate_curved(const SdfGrid& grid, Vec3 p, Vec3 v, const TraceSettings& s, Vec3& p_end, Vec3& v_end,
                          Observer&& observe)
{
  const double h = s.step_size;
  const bool degenerate = v.squaredNorm() == 0.0;
  double best = std::numeric_limits<double>::infinity();
  int last_improvement = 0;
  Terminal result = Terminal::max_steps;
  for (int i = 0;; ++i) {
    const double phi = grid.sample(p);
    if (!std::isfinite(phi)) {
      result = Terminal::stalled;
      break;
    }
    if (std::abs(phi) <= s.hit_tolerance) {
      result = Terminal::surface_hit;
      break;
    }
    if (p.norm() > s.escape_radius) {
      result = Terminal::escaped;
      break;
    }
    if (std::abs(phi) < best - s.stall_decrease) {
      best = std::abs(phi);
      last_improvement = i;
    } else if (i - last_improvement >= s.stall_window) {
      result = Terminal::stalled;
      break;
    }
    if (i >= s.curved_max_steps) {
      result = Terminal::max_steps;
      break;
    }
    const Vec3 g = grid.gradient(p);
    if (!g.allFinite()) {
      result = Terminal::stalled;
      break;
    }
    observe(i, p, v, phi, g);
    const Vec3 v_next = v - h * g;
    if (degenerate) {
      const double gn = g.norm();
      if (gn < 1e-12) {
        result = Terminal::stalled;
        break;
      }
      p = p - h * phi * g / gn;
    } else {
      const double speed = v_next.norm();
      if (speed < 1e-12) {
        result = Terminal::stalled;
        break;
      }
      p = p + h * phi * v_next / speed;
    }
    v = v_next;
  }
  p_end = p;
  v_end = v;
  return result;
}

inline CurvedTrajectory curved_trace(const SdfGrid& grid, const Vec3& p0, const Vec3& v0, bool want_jacobians,
                                     const TraceSettings& s = {})
{
  if (!grid.contains(p0)) throw ConfigError("curved trace must start inside the grid");
  CurvedTrajectory traj;
  traj.step_size = s.step_size;
  traj.degenerate = v0.squaredNorm() == 0.0;
  Vec3 p_end, v_end;
  traj.terminal = integrate_curved(grid, p0, v0, s, p_end, v_end,
                                   [&](int, const Vec3& p, const Vec3& v, double phi, const Vec3& g) {
                                     traj.states.push_back({p, v});
                                     if (want_jacobians && !traj.degenerate) {
                                       traj.jacobians.push_back(jacobian_from_samples(phi, g, grid.hessian(p), v));
                                     }
                                   });
  traj.states.push_back({p_end, v_end});
  return traj;
}

struct Perturbation {
  Mat6 psi = Mat6::Identity();
  Vec3 dP_dalpha = Vec3::Zero();
};

/// Product of per-step propagators over steps [from, to):
///   psi = prod_{i=to-1..from} (I + h J(t_i))      (first-order Taylor)
///   psi = prod_{i=to-1..from} exp(h J(t_i))       (exact per step)
inline Mat6 propagator(const CurvedTrajectory& traj, int from, int to, bool matrix_exponential = false);

namespace detail {

/// exp(h J) through the eigendecomposition E diag(e^{lambda h}) E^-1.
/// Falls back to Pade scaling-and-squaring when J is (nearly) defective.
inline Mat6 step_exponential(const Mat6& J, double h)
{
  Eigen::EigenSolver<Mat6> es(J);
  if (es.info() == Eigen::Success) {
    const Eigen::Matrix<std::complex<double>, 6, 6> E = es.eigenvectors();
    Eigen::FullPivLU<Eigen::Matrix<std::complex<double>, 6, 6>> lu(E);
    if (lu.isInvertible() && lu.rcond() > 1e-10) {
      Eigen::Matrix<std::complex<double>, 6, 1> d = (es.eigenvalues() * h).array().exp();
      return (E * d.asDiagonal() * lu.inverse()).real();
    }
  }
  return (J * h).exp();
}

}  // namespace detail

inline Mat6 propagator(const CurvedTrajectory& traj, int from, int to, bool matrix_exponential)
{
  if (static_cast<int>(traj.jacobians.size()) < to) throw ConfigError("trajectory carries no jacobians");
  const double h = traj.step_size;
  Mat6 psi = Mat6::Identity();
  for (int i = from; i < to; ++i) {
    const Mat6 step = matrix_exponential ? detail::step_exponential(traj.jacobians[i], h)
                                         : Mat6(Mat6::Identity() + h * traj.jacobians[i]);
    psi = step * psi;
  }
  return psi;
}

/// Propagates an initial velocity perturbation dv0/dalpha to the end of a
/// surface-hitting trajectory: dP/dalpha = first three rows of
/// psi(t_n) (0, dv0/dalpha)^T.
inline Perturbation propagate_perturbation(const CurvedTrajectory& traj, const Vec3& dv0_dalpha,
                                           bool matrix_exponential = false)
{
  if (traj.terminal != Terminal::surface_hit) throw NumericalError("trajectory did not reach the surface");
  Perturbation out;
  if (traj.degenerate) return out;
  if (static_cast<int>(traj.jacobians.size()) != traj.steps()) throw ConfigError("trajectory carries no jacobians");
  out.psi = propagator(traj, 0, traj.steps(), matrix_exponential);
  Vec6 delta0;
  delta0 << Vec3::Zero(), dv0_dalpha;
  out.dP_dalpha = (out.psi * delta0).head<3>();
  return out;
}

/// Landing point of a curved trace, optionally with dP/dalpha accumulated
/// on the fly (no trajectory storage). Used by the per-pixel renderer.
struct CurvedLanding {
  Terminal terminal = Terminal::max_steps;
  Vec3 position = Vec3::Zero();
  Vec3 dP_dalpha = Vec3::Zero();
  int steps = 0;
};

inline CurvedLanding curved_land(const SdfGrid& grid, const Vec3& p0, const Vec3& v0, const TraceSettings& s,
                                 const Vec3* dv0_dalpha = nullptr)
{
  CurvedLanding out;
  const bool track = dv0_dalpha != nullptr && v0.squaredNorm() > 0.0;
  Vec6 delta = Vec6::Zero();
  if (track) delta.tail<3>() = *dv0_dalpha;
  Vec3 v_end;
  out.terminal = integrate_curved(grid, p0, v0, s, out.position, v_end,
                                  [&](int i, const Vec3& p, const Vec3& v, double phi, const Vec3& g) {
                                    out.steps = i + 1;
                                    if (track) {
                                      const Mat6 J = jacobian_from_samples(phi, g, grid.hessian(p), v);
                                      delta += s.step_size * (J * delta);
                                    }
                                  });
  if (track) out.dP_dalpha = delta.head<3>();
  return out;
}

}  // namespace inversevis

#endif  // INVERSEVIS_RAY_ENGINE_HPP
