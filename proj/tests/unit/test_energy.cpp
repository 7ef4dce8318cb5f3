#include "../support/fixtures.hpp"

#include <inversevis/energy.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace inversevis;

namespace {

// Independent recount: voxel i is touched by x iff its centre lies within
// one voxel of x on every axis, on the low side strictly.
long long naive_visited(const VisibilityGrid& g, const std::vector<Vec3>& hits)
{
  std::set<std::size_t> seen;
  const int R = g.resolution();
  for (const auto& x : hits) {
    for (int k = 0; k < R; ++k)
      for (int j = 0; j < R; ++j)
        for (int i = 0; i < R; ++i) {
          if (!g.marked(i, j, k)) continue;
          const Vec3 u = (x - Vec3::Constant(g.lo())) / g.voxel_size() - Vec3::Constant(0.5);
          const int idx[3] = {i, j, k};
          bool inside = true;
          for (int a = 0; a < 3; ++a) inside = inside && u[a] >= idx[a] - 1 && u[a] < idx[a] + 1;
          if (inside) seen.insert(g.index(i, j, k));
        }
  }
  return static_cast<long long>(seen.size());
}

}  // namespace

TEST(VisibilityGrid, MatchesNaiveRecount)
{
  VisibilityGrid g(12, -1.0, 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.1, 1.1);
  for (int k = 0; k < 12; ++k)
    for (int j = 0; j < 12; ++j)
      for (int i = 0; i < 12; ++i)
        if ((i + 2 * j + 3 * k) % 4 == 0) g.set_marked(i, j, k, true);

  std::vector<Vec3> hits;
  for (int n = 0; n < 40; ++n) {
    hits.emplace_back(u(rng), u(rng), u(rng));
    g.visit(hits.back());
    EXPECT_EQ(g.visited_count(), naive_visited(g, hits));
  }
}

TEST(VisibilityGrid, VisitReturnsFreshCountAndResets)
{
  VisibilityGrid g(4, 0.0, 4.0);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) g.set_marked(i, j, k, true);
  EXPECT_EQ(g.visit({2.0, 2.0, 2.0}), 8);  // cell spanned by centres 1.5 and 2.5
  EXPECT_EQ(g.visit({2.1, 2.1, 2.1}), 0);
  EXPECT_EQ(g.visit({0.2, 0.2, 0.2}), 1);  // below the first centre: one voxel
  EXPECT_EQ(g.visit({Vec3::Constant(std::nan(""))}), 0);
  EXPECT_EQ(g.visited_count(), 9);
  g.reset_visits();
  EXPECT_EQ(g.visited_count(), 0);
  EXPECT_FALSE(g.visited(1, 1, 1));
}

TEST(VisibilityGrid, EmptyShellThrows)
{
  VisibilityGrid g(4, 0.0, 1.0);
  EXPECT_THROW(g.ratio(), NumericalError);
  EXPECT_THROW(VisibilityGrid(0, 0.0, 1.0), ConfigError);
}

TEST(MarkVoxels, ShellIsTwoLayersAroundSphere)
{
  const Scene& s = ivtest::sphere_scene(64);
  const VisibilityGrid v = mark_voxels(s.grid);
  const double edge = v.voxel_size();
  for (int k = 0; k < 64; k += 3)
    for (int j = 0; j < 64; j += 3)
      for (int i = 0; i < 64; ++i) {
        const double r = v.center(i, j, k).norm();
        if (std::abs(r - 0.8) < 0.5 * edge) EXPECT_TRUE(v.marked(i, j, k));
        if (std::abs(r - 0.8) > 1.5 * edge) EXPECT_FALSE(v.marked(i, j, k));
      }
  const VisibilityGrid resampled = mark_voxels(s.grid, 32);
  EXPECT_EQ(resampled.resolution(), 32);
  EXPECT_GT(resampled.marked_count(), 0);
  EXPECT_LT(resampled.marked_count(), v.marked_count());
}

TEST(Energy, DirectDiscAreaOnSphere)
{
  const Scene& s = ivtest::sphere_scene(64);
  Mesh mesh = s.mesh;
  for (auto& x : mesh.scalars) x = 0.5;
  const Frame f = trace_frame(s, make_camera(kPi / 2, 0), 128, 128, DirectOnly{});
  const EnergyReport r = energy(f, mesh, ImportanceField::scalar_field(), 1.0);
  const double disc = kPi * std::pow(0.8 / 1.25, 2);
  EXPECT_NEAR(r.direct_term, 0.5 * disc, 0.03 * 0.5 * disc);
  EXPECT_EQ(r.indirect_term, 0.0);
  EXPECT_DOUBLE_EQ(r.mean_scalar, 0.5);
  EXPECT_LT(r.visibility, 0.0);
}

TEST(Energy, GammaWeightsDirectTermOnly)
{
  const Scene& s = ivtest::sphere_scene(64);
  const Frame f = trace_frame(s, make_camera(1.0, 0.4), 64, 64, InverseVisParams{});
  const EnergyReport a = energy(f, s.mesh, ImportanceField::scalar_field(), 1.0);
  const EnergyReport b = energy(f, s.mesh, ImportanceField::scalar_field(), 0.25);
  EXPECT_DOUBLE_EQ(a.direct_term, b.direct_term);
  EXPECT_DOUBLE_EQ(b.total, 0.25 * b.direct_term + b.indirect_term);
  EXPECT_GT(a.indirect_term, 0.0);
  EXPECT_THROW(energy(f, s.mesh, ImportanceField::scalar_field(), -1.0), ConfigError);
}

TEST(Energy, VisibilityModeCountsFreshPixels)
{
  const Scene& s = ivtest::sphere_scene(64);
  VisibilityGrid vis = mark_voxels(s.grid);
  const Frame f = trace_frame(s, make_camera(kPi / 2, 0), 96, 96, InverseVisParams{});
  EXPECT_THROW(energy(f, s.mesh, ImportanceField::visibility_field(), 1.0), ConfigError);

  const EnergyReport r = energy(f, s.mesh, ImportanceField::visibility_field(), 1.0, &vis);
  const Census c = r.census;
  const double fresh_pixels = r.total / f.pixel_area();
  EXPECT_NEAR(fresh_pixels, std::round(fresh_pixels), 1e-6);
  EXPECT_LE(fresh_pixels, c.direct + c.indirect_hits);
  EXPECT_GT(r.visibility, r.frontface);
  EXPECT_GT(r.frontface, 0.3);

  VisibilityGrid again = mark_voxels(s.grid);
  EXPECT_DOUBLE_EQ(visibility_ratio(again, hit_positions(f)), r.visibility);
}

TEST(Energy, MaskSelectsVertices)
{
  const Scene& s = ivtest::sphere_scene(64);
  const Frame f = trace_frame(s, make_camera(kPi / 2, 0), 64, 64, DirectOnly{});
  std::vector<std::uint8_t> none(s.mesh.vertex_count(), 0), all(s.mesh.vertex_count(), 1);
  EXPECT_EQ(energy(f, s.mesh, ImportanceField::mask_field(none), 1.0).total, 0.0);
  const EnergyReport full = energy(f, s.mesh, ImportanceField::mask_field(all), 1.0);
  EXPECT_NEAR(full.direct_term, f.census().direct * f.pixel_area(), 1e-9);
}

TEST(Energy, AlphaGradientVanishesForConstantImportance)
{
  const Scene& s = ivtest::sphere_scene(64);
  Mesh mesh = s.mesh;
  for (auto& x : mesh.scalars) x = 0.7;
  const Frame f = trace_frame(s, make_camera(kPi / 2, 0), 48, 48, InverseVisParams{}, true);
  EXPECT_NEAR(energy_alpha_gradient(f, mesh, ImportanceField::scalar_field()), 0.0, 1e-12);
}
