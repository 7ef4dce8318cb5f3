#include "../support/fixtures.hpp"

#include <inversevis/techniques.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace inversevis;

namespace {

// First root of z(t) - h(x(t), y(t)) along a local-frame ray, by dense
// sampling then bisection.
std::optional<Vec3> brute_force_mirror(const MirrorParams& m, const Vec3& o, const Vec3& d)
{
  auto f = [&](double t) {
    const Vec3 p = o + t * d;
    return p.z() - mirror_surface(m, p.x(), p.y()).height;
  };
  double prev_t = 1e-6, prev = f(prev_t);
  for (int i = 1; i <= 200000; ++i) {
    const double t = 1e-4 * i;
    const double v = f(t);
    if ((v <= 0) != (prev <= 0)) {
      double a = prev_t, b = t;
      for (int k = 0; k < 80; ++k) {
        const double mid = 0.5 * (a + b);
        if ((f(mid) <= 0) == (prev <= 0)) a = mid;
        else b = mid;
      }
      const Vec3 p = o + 0.5 * (a + b) * d;
      if (std::abs(p.x()) <= m.half_extent && std::abs(p.y()) <= m.half_extent) return p;
    }
    prev_t = t;
    prev = v;
  }
  return std::nullopt;
}

}  // namespace

TEST(Technique, NamesRoundTrip)
{
  for (const char* name : {"direct", "neugebauer", "mirror", "inversevis"}) {
    EXPECT_EQ(technique_name(default_technique(name)), name);
    EXPECT_NO_THROW(validate(default_technique(name)));
  }
  EXPECT_THROW(default_technique("fisheye"), ConfigError);
}

TEST(Technique, ValidateRejectsBadParameters)
{
  EXPECT_THROW(validate(InverseVisParams{0.0, 0.4}), ConfigError);
  EXPECT_THROW(validate(InverseVisParams{0.5, -0.1}), ConfigError);
  EXPECT_THROW(validate(NeugebauerParams{Vec3::Zero(), 0.8, 0.5}), ConfigError);
  EXPECT_THROW(validate(NeugebauerParams{Vec3::Zero(), -1.0, 2.0}), ConfigError);
  MirrorParams m;
  m.offset = 0.0;
  EXPECT_THROW(validate(m), ConfigError);
}

TEST(RingRay, OutsideRingHasNoRay)
{
  const Camera cam = make_camera(1.0, 0.4);
  const NeugebauerParams p{Vec3::Zero(), 0.5, 1.0};
  EXPECT_FALSE(ring_ray(cam, {0.2, 0.1}, p));
  EXPECT_FALSE(ring_ray(cam, {1.0, 0.5}, p));
  EXPECT_TRUE(ring_ray(cam, {0.7, 0.0}, p));
}

TEST(RingRay, BlendFromTowardViewerToAway)
{
  const Camera cam = make_camera(1.0, 0.4);
  const NeugebauerParams p{Vec3::Zero(), 0.5, 1.0};
  const Vec3 radial = cam.right;
  // Mid-ring: purely radial.
  auto mid = ring_ray(cam, {0.75, 0.0}, p);
  ASSERT_TRUE(mid);
  EXPECT_NEAR(mid->direction.dot(radial), 1.0, 1e-12);
  EXPECT_TRUE(mid->origin.isZero());
  // Outer edge: blend 2*1/1.5 - 1 = +1/3, tilted away from the camera.
  auto outer = ring_ray(cam, {1.0, 0.0}, p);
  ASSERT_TRUE(outer);
  EXPECT_NEAR(outer->direction.dot(cam.look), 1.0 / std::sqrt(10.0), 1e-12);
  // Inner edge: blend 2*0.5/1.5 - 1 = -1/3, tilted toward the camera.
  auto inner = ring_ray(cam, {0.0, 0.5}, p);
  ASSERT_TRUE(inner);
  const Vec3 expect = (cam.up - cam.look / 3.0).normalized();
  EXPECT_NEAR(inner->direction.dot(expect), 1.0, 1e-12);
}

TEST(RingRay, AutomaticInnerRadiusIsSilhouette)
{
  const Scene& s = ivtest::sphere_scene(64);
  const Camera cam = make_camera(0.7, 2.0);
  const NeugebauerParams r = resolve_ring(NeugebauerParams{}, s.mesh, cam);
  double worst = 0.0;
  for (const auto& v : s.mesh.vertices) worst = std::max(worst, cam.project(v).norm());
  EXPECT_DOUBLE_EQ(r.r1, worst);
  EXPECT_LT(r.r1, r.r2);
}

TEST(RingRay, RingPixelsSeeTheFarSide)
{
  const Scene& s = ivtest::sphere_scene(64);
  const Camera cam = make_camera(kPi / 2, 0.0);
  const NeugebauerParams p = resolve_ring(NeugebauerParams{}, s.mesh, cam);
  int hits = 0, back = 0;
  for (int k = 0; k < 36; ++k) {
    const double a = deg_to_rad(10.0 * k), r = 0.5 * (p.r1 + p.r2) + 0.05;
    auto h = neugebauer_map(s, cam, {r * std::cos(a), r * std::sin(a)}, p);
    ASSERT_TRUE(h);
    if (!h->found) continue;
    ++hits;
    back += h->point.position.dot(cam.look) > 0.0;
  }
  EXPECT_EQ(hits, 36);
  EXPECT_EQ(back, 36);  // past mid-ring the rays lean away from the camera
}

TEST(Mirror, SurfaceNormalMatchesHeightDerivatives)
{
  MirrorParams m;
  m.omega = {0.3, -0.2, 0.15, 0.1, -0.4};
  const double x = 0.4, y = -0.7, h = 1e-6;
  const double hx = (mirror_surface(m, x + h, y).height - mirror_surface(m, x - h, y).height) / (2 * h);
  const double hy = (mirror_surface(m, x, y + h).height - mirror_surface(m, x, y - h).height) / (2 * h);
  const Vec3 expect = Vec3(-hx, -hy, 1.0).normalized();
  EXPECT_NEAR(mirror_surface(m, x, y).normal.dot(expect), 1.0, 1e-9);
}

TEST(Mirror, ClosedFormMatchesBruteForce)
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Camera cam = make_camera(1.2, 0.3);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    MirrorParams m;
    for (auto& w : m.omega) w = 0.3 * u(rng);
    const MirrorFrame f = mirror_frame(cam, m);
    const Ray ray = pixel_ray(cam, {u(rng), u(rng)});
    const auto closed = intersect_mirror(f, m, ray);
    const auto brute = brute_force_mirror(m, f.to_local(ray.origin), f.dir_to_local(ray.direction));
    ASSERT_EQ(closed.has_value(), brute.has_value()) << "trial " << trial;
    if (!closed) continue;
    EXPECT_LT((*closed - *brute).norm(), 1e-6) << "trial " << trial;
    ++compared;
  }
  EXPECT_GE(compared, 40);
}

TEST(Mirror, FlatMirrorSendsRayBackAlongView)
{
  const Camera cam = make_camera(kPi / 2, 0.0);
  const Ray primary = pixel_ray(cam, {0.9, 0.9});
  auto secondary = mirror_ray(cam, primary, MirrorParams{});
  ASSERT_TRUE(secondary);
  EXPECT_NEAR(secondary->direction.dot(-cam.look), 1.0, 1e-12);
  EXPECT_NEAR((secondary->origin - primary.origin).dot(cam.look), (secondary->origin - primary.origin).norm(), 1e-9);
  EXPECT_NEAR(secondary->origin.dot(cam.look), std::sqrt(3.0) + 1.0, 1e-9);
}

TEST(Mirror, TiltedMirrorReachesBackOfSphere)
{
  const Scene& s = ivtest::sphere_scene(64);
  const Camera cam = make_camera(kPi / 2, 0.0);
  MirrorParams m;
  m.omega = {0.0, 0.0, 0.0, 0.6, 0.0};
  int back = 0;
  for (int py = 0; py < 32; ++py) {
    for (int px = 0; px < 32; ++px) {
      auto h = mirror_map(s, cam, pixel_ray(cam, pixel_ndc(px, py, 32, 32)), m);
      if (h && h->found && h->point.position.dot(cam.look) > 0.2) ++back;
    }
  }
  EXPECT_GT(back, 0);
}
