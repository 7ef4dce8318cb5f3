#include "../support/fixtures.hpp"

#include <inversevis/ray_engine.hpp>
#include <inversevis/techniques.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace inversevis;

namespace {

const Scene& sphere() { return ivtest::sphere_scene(64); }

double max_rel_entry_error(const Mat6& a, const Mat6& ref)
{
  return (a - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff();
}

/// Same ODE on the exact sphere field phi = |p| - 0.8, fine step.
Vec3 analytic_landing(Vec3 p, Vec3 v, double h)
{
  for (int i = 0; i < 200000; ++i) {
    const double phi = p.norm() - 0.8;
    if (std::abs(phi) <= 1e-4) return p;
    const Vec3 g = p.normalized();
    v -= h * g;
    p += h * phi * v.normalized();
  }
  return Vec3::Constant(std::nan(""));
}

double geodesic(const Vec3& a, const Vec3& b) { return 0.8 * angle_between(a, b); }

}  // namespace

TEST(SphereTrace, HitsNorthPole)
{
  const SdfGrid& g = sphere().grid;
  const RayHit h = sphere_trace(g, {{0, 0, 2.5}, {0, 0, -1}});
  ASSERT_TRUE(h.found);
  EXPECT_LT((h.position - Vec3(0, 0, 0.8)).norm(), 2 * g.voxel_diagonal());
  EXPECT_LE(std::abs(g.sample(h.position)), 1e-3);
  EXPECT_EQ(h.terminal, Terminal::surface_hit);
}

TEST(SphereTrace, MissesWhenPointingAway)
{
  const RayHit h = sphere_trace(sphere().grid, {{0, 0, 2.5}, {0, 0, 1}});
  EXPECT_FALSE(h.found);
  EXPECT_EQ(h.terminal, Terminal::escaped);
}

TEST(SphereTrace, TangentRayHitsNearSilhouette)
{
  // Trilinear sampling rounds the field off near vertices, so the grazing
  // line is placed against the sampled field rather than the mesh.
  const Scene& s = ivtest::sphere_scene(200);
  const double tol = s.trace.hit_tolerance;
  const Vec3 v = s.mesh.vertices[5];
  const Vec3 n = v.normalized();
  const Vec3 dir = n.cross(Vec3(0.3, 0.2, 1.0)).normalized();
  Vec3 touch = v;
  for (int it = 0; it < 4; ++it) {
    double lowest = 1e9;
    Vec3 at = touch;
    for (double t = -0.1; t <= 0.1; t += 1e-4) {
      const double d = s.grid.sample(touch + t * dir);
      if (d < lowest) {
        lowest = d;
        at = touch + t * dir;
      }
    }
    touch = at + (0.5 * tol - lowest) * n;
  }
  ASSERT_NEAR(s.grid.sample(touch), 0.5 * tol, 0.25 * tol);
  const RayHit h = sphere_trace(s.grid, {touch - 2.0 * dir, dir}, s.trace);
  ASSERT_TRUE(h.found);
  EXPECT_LT((h.position - touch).norm(), 0.1);
}

TEST(HullHit, CenterRayFarSide)
{
  const SdfGrid& g = sphere().grid;
  auto p = farthest_hull_hit(g, {{0, 0, 2.5}, {0, 0, -1}}, 0.4);
  ASSERT_TRUE(p);
  EXPECT_LT((*p - Vec3(0, 0, -1.2)).norm(), 2 * g.voxel_diagonal());
}

TEST(HullHit, OffsetRayCircleIntersection)
{
  const SdfGrid& g = sphere().grid;
  const Camera cam = make_camera(0.0, 0.0);
  auto p = farthest_hull_hit(g, pixel_ray(cam, {1.0 / 1.25, 0}), 0.4);
  ASSERT_TRUE(p);
  EXPECT_NEAR(p->x(), 1.0, 1e-9);
  EXPECT_NEAR(p->z(), -std::sqrt(1.2 * 1.2 - 1.0), 2 * g.voxel_diagonal());
}

TEST(HullHit, MissAndBadIsovalue)
{
  const SdfGrid& g = sphere().grid;
  EXPECT_FALSE(farthest_hull_hit(g, {{1.5, 0, 2.4}, {0, 0, -1}}, 0.4));
  EXPECT_THROW(farthest_hull_hit(g, {{0, 0, 2.4}, {0, 0, -1}}, 0.0), ConfigError);
}

TEST(SeedVelocity, WorkedExamples)
{
  const Vec3 r(0, 0, -1);
  EXPECT_EQ(seed_velocity(Vec3(0, 0, 1), r, 0.5), Vec3::Zero());
  const Vec3 v = seed_velocity(Vec3(1, 0, 0), r, 0.5);
  EXPECT_NEAR(v.norm(), 0.5, 1e-15);
  EXPECT_LT((v.normalized() - r).norm(), 1e-15);
  EXPECT_EQ(seed_velocity(Vec3(0.3, 0.4, 0.2), Vec3(0.6, 0, 0.8), 0.0), Vec3::Zero());
}

TEST(SeedVelocity, HomogeneousInAlpha)
{
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    const Vec3 g(n(rng), n(rng), n(rng)), r = Vec3(n(rng), n(rng), n(rng)).normalized();
    const double a = std::abs(n(rng)) + 0.1;
    EXPECT_EQ(seed_velocity(g, r, 2 * a), Vec3(2 * seed_velocity(g, r, a)));
    EXPECT_LT((seed_velocity_alpha_derivative(g, r) * a - seed_velocity(g, r, a)).norm(), 1e-12);
  }
}

TEST(CurvedTrace, DegenerateFallLineHitsBacksidePole)
{
  const SdfGrid& g = sphere().grid;
  const CurvedTrajectory t = curved_trace(g, {0, 0, -1.2}, Vec3::Zero(), true);
  ASSERT_EQ(t.terminal, Terminal::surface_hit);
  EXPECT_TRUE(t.degenerate);
  EXPECT_TRUE(t.jacobians.empty());
  EXPECT_LT((t.end_point() - Vec3(0, 0, -0.8)).norm(), 2 * g.voxel_diagonal());

  // seeding from the pole pixel produces the same degenerate velocity
  const Vec3 v0 = seed_velocity(g, {0, 0, -1.2}, {0, 0, -1}, 0.5);
  EXPECT_EQ(v0, Vec3::Zero());
}

TEST(CurvedTrace, SymplecticUpdateIsExact)
{
  const SdfGrid& g = sphere().grid;
  const CurvedTrajectory t = curved_trace(g, {1.2, 0, 0}, {0, 0.3, -0.4}, false);
  ASSERT_GT(t.steps(), 3);
  for (int i = 0; i < t.steps(); ++i) {
    const auto& a = t.states[i];
    const auto& b = t.states[i + 1];
    const Vec3 v_next = a.v - t.step_size * g.gradient(a.p);
    const Vec3 p_next = a.p + t.step_size * g.sample(a.p) * v_next / v_next.norm();
    EXPECT_EQ(b.v, v_next);
    EXPECT_EQ(b.p, p_next);
  }
  if (t.terminal == Terminal::surface_hit) EXPECT_LE(std::abs(g.sample(t.end_point())), 1e-3);
}

TEST(CurvedTrace, LargerAlphaWrapsFarther)
{
  const SdfGrid& g = sphere().grid;
  const Vec3 seed(1.2, 0, 0), view(0, 0, -1);
  const Vec3 nadir(0.8, 0, 0);
  auto land = [&](double alpha) {
    const CurvedTrajectory t = curved_trace(g, seed, seed_velocity(g, seed, view, alpha), false);
    EXPECT_EQ(t.terminal, Terminal::surface_hit) << alpha;
    return t.end_point();
  };
  const Vec3 small = land(0.5), large = land(1.0);
  EXPECT_GT(geodesic(large, nadir), geodesic(small, nadir));

  // the fine-step oracle on the exact field orders them the same way
  const Vec3 o_small = analytic_landing(seed, 0.5 * view, 0.001);
  const Vec3 o_large = analytic_landing(seed, 1.0 * view, 0.001);
  EXPECT_GT(geodesic(o_large, nadir), geodesic(o_small, nadir));
  EXPECT_LT((small - o_small).norm(), 0.1);
  EXPECT_LT((large - o_large).norm(), 0.1);
}

TEST(CurvedTrace, StallsOnFlatField)
{
  SdfGrid flat(16);
  for (std::size_t i = 0; i < flat.voxel_count(); ++i) flat.set_voxel(i, 0.2f, 0, {1, 0, 0});
  EXPECT_EQ(curved_trace(flat, Vec3::Zero(), {1, 0, 0}, false).terminal, Terminal::stalled);
  EXPECT_EQ(curved_trace(flat, Vec3::Zero(), Vec3::Zero(), false).terminal, Terminal::stalled);
  EXPECT_THROW(curved_trace(flat, {3, 0, 0}, {1, 0, 0}, false), ConfigError);
}

TEST(Jacobian, BlockStructure)
{
  const Mat6 J = jacobian_from_samples(0.0, {0.1, 0.9, 0.2}, Mat3::Identity(), {0.3, -0.2, 0.5});
  EXPECT_TRUE((J.block<3, 3>(0, 3).array() == 0.0).all());
  EXPECT_TRUE((J.block<3, 3>(3, 3).array() == 0.0).all());
  const Mat6 K = jacobian_at(sphere().grid, {0.3, 0.9, -0.4}, {1, 2, 3});
  EXPECT_TRUE((K.block<3, 3>(3, 3).array() == 0.0).all());
  EXPECT_THROW(jacobian_at(sphere().grid, {0.3, 0.9, -0.4}, Vec3::Zero()), NumericalError);
}

TEST(Jacobian, MatchesFiniteDifferencesOfFlow)
{
  const SdfGrid& g = sphere().grid;
  Vec6 x;
  x << 0.55, -0.71, 0.48, 0.3, 0.5, -0.2;
  const Mat6 J = jacobian_at(g, x.head<3>(), x.tail<3>());
  Mat6 fd;
  const double eps = g.voxel_size();  // the grid's own differencing step
  for (int c = 0; c < 6; ++c) {
    Vec6 e = Vec6::Zero();
    e[c] = eps;
    fd.col(c) = (phase_flow(g, x + e) - phase_flow(g, x - e)) / (2 * eps);
  }
  EXPECT_LE(max_rel_entry_error(J, fd), 0.05);
}

TEST(Perturbation, ZeroStepTrajectoryIsIdentity)
{
  const SdfGrid& g = sphere().grid;
  const RayHit h = sphere_trace(g, {{0.1, 0.2, 2.4}, {0, 0, -1}});
  ASSERT_TRUE(h.found);
  const CurvedTrajectory t = curved_trace(g, h.position, {1, 0, 0}, true);
  ASSERT_EQ(t.steps(), 0);
  const Perturbation p = propagate_perturbation(t, {0, 1, 0});
  EXPECT_EQ(p.psi, Mat6::Identity());
  EXPECT_EQ(p.dP_dalpha, Vec3::Zero());
}

TEST(Perturbation, PlaneFieldKeepsVelocityPerturbation)
{
  SdfGrid g = build_grid(primitives::wall(-0.5, 2.0, 4), 32);
  const CurvedTrajectory t = curved_trace(g, {0.3, 0.0, 0.1}, {-0.2, 0.5, 0.0}, true);
  ASSERT_EQ(t.terminal, Terminal::surface_hit);
  const Perturbation p = propagate_perturbation(t, {0, 1, 0});
  const Mat3 vv = p.psi.block<3, 3>(3, 3);
  EXPECT_LT((vv - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  const Mat3 vp = p.psi.block<3, 3>(3, 0);
  EXPECT_LT(vp.cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_GT(p.dP_dalpha.norm(), 0.0);
}

TEST(Perturbation, CompositionAndExponentialAgreement)
{
  const SdfGrid& g = sphere().grid;
  const Vec3 seed(1.0, 0.0, -std::sqrt(1.2 * 1.2 - 1.0));
  const Vec3 v0 = seed_velocity(g, seed, {0, 0, -1}, 0.5);
  const CurvedTrajectory t = curved_trace(g, seed, v0, true);
  ASSERT_EQ(t.terminal, Terminal::surface_hit);
  ASSERT_GT(t.steps(), 4);
  const int k = t.steps() / 2;
  const Mat6 whole = propagator(t, 0, t.steps());
  const Mat6 split = propagator(t, k, t.steps()) * propagator(t, 0, k);
  EXPECT_LT((whole - split).cwiseAbs().maxCoeff(), 1e-12 * whole.cwiseAbs().maxCoeff());

  const Mat6 exact = propagator(t, 0, t.steps(), true);
  EXPECT_LE(max_rel_entry_error(whole, exact), 0.10);
}

TEST(Perturbation, OnTheFlyMatchesStoredTrajectory)
{
  const SdfGrid& g = sphere().grid;
  const Vec3 seed(1.0, 0.0, -std::sqrt(1.2 * 1.2 - 1.0));
  const Vec3 gr = g.gradient(seed);
  const Vec3 v0 = seed_velocity(gr, {0, 0, -1}, 0.5);
  const Vec3 dv = seed_velocity_alpha_derivative(gr, {0, 0, -1});
  const CurvedTrajectory t = curved_trace(g, seed, v0, true);
  const Perturbation p = propagate_perturbation(t, dv);
  const CurvedLanding l = curved_land(g, seed, v0, {}, &dv);
  EXPECT_EQ(l.terminal, t.terminal);
  EXPECT_EQ(l.position, t.end_point());
  EXPECT_LT((l.dP_dalpha - p.dP_dalpha).norm(), 1e-9 * std::max(1.0, p.dP_dalpha.norm()));
}

TEST(Perturbation, AlphaDerivativeMatchesRetrace)
{
  // The coarse grid makes retraced landing points jitter at this step size.
  const Scene& s = ivtest::sphere_scene(200);
  const Camera cam = make_camera(kPi / 2, 0.0);
  int checked = 0;
  for (double r : {0.85, 0.9, 0.95}) {
    for (double ang : {0.3, 1.9, 4.0}) {
      const Ray ray = pixel_ray(cam, Vec2(r * std::cos(ang), r * std::sin(ang)));
      auto seed = hull_seed(s, ray, 0.4);
      ASSERT_TRUE(seed);
      const Hit mid = inversevis_from_seed(s, *seed, 0.5, true);
      const Hit lo = inversevis_from_seed(s, *seed, 0.49, false);
      const Hit hi = inversevis_from_seed(s, *seed, 0.51, false);
      if (!mid.found || !lo.found || !hi.found) continue;
      const Vec3 fd = (hi.point.position - lo.point.position) / 0.02;
      EXPECT_GE(mid.dP_dalpha.normalized().dot(fd.normalized()), 0.9);
      ++checked;
    }
  }
  EXPECT_GE(checked, 6);
}

TEST(Perturbation, RejectsNonHitTrajectory)
{
  SdfGrid flat(16);
  for (std::size_t i = 0; i < flat.voxel_count(); ++i) flat.set_voxel(i, 0.2f, 0, {1, 0, 0});
  const CurvedTrajectory t = curved_trace(flat, Vec3::Zero(), {1, 0, 0}, true);
  EXPECT_THROW(propagate_perturbation(t, {1, 0, 0}), NumericalError);
}
