#ifndef INVERSEVIS_ENERGY_HPP
#define INVERSEVIS_ENERGY_HPP

#include "frame.hpp"

#include <functional>
#include <vector>

namespace inversevis {

/// Voxels of the surface shell (|distance| < voxel edge) and which of them
/// some ray hit has touched.
///
/// A hit touches the eight voxels whose centres span the trilinear cell
/// containing it. The shell is two voxels thick, so a single containing
/// voxel per hit would leave the inner or outer layer untouchable from one
/// side of the surface.
class VisibilityGrid {
public:
  VisibilityGrid() = default;
  VisibilityGrid(int res, double lo, double hi)
      : res_(res), lo_(lo), hi_(hi), voxel_((hi - lo) / res),
        marked_(static_cast<std::size_t>(res) * res * res, 0), visited_(marked_.size(), 0)
  {
    if (res < 1 || !(hi > lo)) throw ConfigError("visibility grid needs positive resolution and extent");
  }

  int resolution() const { return res_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double voxel_size() const { return voxel_; }

  std::size_t index(int i, int j, int k) const
  {
    return (static_cast<std::size_t>(k) * res_ + j) * res_ + i;
  }
  Vec3 center(int i, int j, int k) const
  {
    return {lo_ + (i + 0.5) * voxel_, lo_ + (j + 0.5) * voxel_, lo_ + (k + 0.5) * voxel_};
  }

  void set_marked(int i, int j, int k, bool m)
  {
    auto& f = marked_[index(i, j, k)];
    marked_count_ += static_cast<int>(m) - static_cast<int>(f);
    f = m;
  }
  bool marked(int i, int j, int k) const { return marked_[index(i, j, k)] != 0; }
  bool visited(int i, int j, int k) const { return visited_[index(i, j, k)] != 0; }
  long long marked_count() const { return marked_count_; }
  long long visited_count() const { return visited_count_; }

  /// Marks the shell voxels around `x` visited; returns how many were new.
  int visit(const Vec3& x)
  {
    if (!x.allFinite()) return 0;
    int base[3];
    for (int a = 0; a < 3; ++a) base[a] = static_cast<int>(std::floor((x[a] - lo_) / voxel_ - 0.5));
    int fresh = 0;
    for (int dk = 0; dk < 2; ++dk) {
      const int k = base[2] + dk;
      if (k < 0 || k >= res_) continue;
      for (int dj = 0; dj < 2; ++dj) {
        const int j = base[1] + dj;
        if (j < 0 || j >= res_) continue;
        for (int di = 0; di < 2; ++di) {
          const int i = base[0] + di;
          if (i < 0 || i >= res_) continue;
          const std::size_t id = index(i, j, k);
          if (!marked_[id] || visited_[id]) continue;
          visited_[id] = 1;
          touched_.push_back(id);
          ++fresh;
        }
      }
    }
    visited_count_ += fresh;
    return fresh;
  }

  void reset_visits()
  {
    for (std::size_t id : touched_) visited_[id] = 0;
    touched_.clear();
    visited_count_ = 0;
  }

  double ratio() const
  {
    if (marked_count_ == 0) throw NumericalError("no surface shell");
    return static_cast<double>(visited_count_) / static_cast<double>(marked_count_);
  }

  /// Visited fraction of the marked voxels whose centres satisfy `in_cluster`.
  double cluster_fraction(const std::function<bool(const Vec3&)>& in_cluster) const
  {
    long long total = 0, seen = 0;
    for (int k = 0; k < res_; ++k)
      for (int j = 0; j < res_; ++j)
        for (int i = 0; i < res_; ++i) {
          const std::size_t id = index(i, j, k);
          if (!marked_[id] || !in_cluster(center(i, j, k))) continue;
          ++total;
          seen += visited_[id];
        }
    if (total == 0) throw NumericalError("empty voxel cluster");
    return static_cast<double>(seen) / static_cast<double>(total);
  }

private:
  int res_ = 0;
  double lo_ = 0.0, hi_ = 0.0, voxel_ = 0.0;
  std::vector<std::uint8_t> marked_, visited_;
  std::vector<std::size_t> touched_;
  long long marked_count_ = 0, visited_count_ = 0;
};

/// Shell voxels of `grid` at resolution `res` (0 = the grid's own). Other
/// resolutions sample the distance field at the new voxel centres.
inline VisibilityGrid mark_voxels(const SdfGrid& grid, int res = 0)
{
  if (res <= 0) res = grid.resolution();
  VisibilityGrid vis(res, grid.lo(), grid.hi());
  const double edge = vis.voxel_size();
  const bool native = res == grid.resolution();
  for (int k = 0; k < res; ++k)
    for (int j = 0; j < res; ++j)
      for (int i = 0; i < res; ++i) {
        const double d = native ? grid.distance_at(grid.index(i, j, k)) : grid.sample(vis.center(i, j, k));
        if (std::abs(d) < edge) vis.set_marked(i, j, k, true);
      }
  return vis;
}

/// Resets `vis` and visits every position; returns the shell fraction touched.
inline double visibility_ratio(VisibilityGrid& vis, const std::vector<Vec3>& hits)
{
  vis.reset_visits();
  for (const auto& h : hits) vis.visit(h);
  return vis.ratio();
}

inline std::vector<Vec3> hit_positions(const Frame& frame)
{
  std::vector<Vec3> out;
  for (const auto& p : frame.pixels)
    if (p.cls != PixelClass::none && p.hit.found) out.push_back(p.hit.point.position);
  return out;
}

struct EnergyReport {
  double direct_term = 0.0;
  double indirect_term = 0.0;
  double gamma = 1.0;
  double total = 0.0;
  double mean_scalar = 0.0;
  Census census;
  double visibility = -1.0;  // negative when no visibility grid was supplied
  double frontface = -1.0;   // shell fraction reached by direct pixels alone
};

/// Pixel sums of importance times pixel area, in row-major order with
/// direct pixels before indirect ones.
///
/// In visibility mode a pixel counts 1 only if it touched a not yet visited
/// shell voxel, so `vis` is required there. In the other modes `vis` is
/// optional and, when given, only feeds the reported visibility ratio.
inline EnergyReport energy(const Frame& frame, const Mesh& mesh, const ImportanceField& importance, double gamma,
                           VisibilityGrid* vis = nullptr)
{
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  const bool vis_mode = importance.mode == ImportanceMode::visibility;
  if (vis_mode && !vis) throw ConfigError("visibility energy needs a visibility grid");

  EnergyReport r;
  r.gamma = gamma;
  r.census = frame.census();
  if (vis) vis->reset_visits();

  double sum = 0.0;
  long long hits = 0;
  auto pass = [&](PixelClass cls) {
    double term = 0.0;
    for (const auto& p : frame.pixels) {
      if (p.cls != cls || !p.hit.found) continue;
      double s;
      if (vis) {
        const bool fresh = vis->visit(p.hit.point.position) > 0;
        s = vis_mode ? (fresh ? 1.0 : 0.0) : barycentric_importance(mesh, importance, p.hit.point.triangle, p.hit.point.bary);
      } else {
        s = barycentric_importance(mesh, importance, p.hit.point.triangle, p.hit.point.bary);
      }
      term += s;
      sum += s;
      ++hits;
    }
    return term * frame.pixel_area();
  };

  r.direct_term = pass(PixelClass::direct);
  if (vis) r.frontface = vis->ratio();
  r.indirect_term = pass(PixelClass::indirect);
  if (vis) r.visibility = vis->ratio();
  r.total = gamma * r.direct_term + r.indirect_term;
  r.mean_scalar = hits ? sum / static_cast<double>(hits) : 0.0;
  return r;
}

/// dE/dalpha from the perturbation of each indirect landing point. Needs a
/// frame traced with alpha gradients.
inline double energy_alpha_gradient(const Frame& frame, const Mesh& mesh, const ImportanceField& importance)
{
  double g = 0.0;
  for (const auto& p : frame.pixels) {
    if (p.cls != PixelClass::indirect || !p.hit.found) continue;
    g += triangle_importance_gradient(mesh, importance, p.hit.point.triangle).dot(p.hit.dP_dalpha);
  }
  return g * frame.pixel_area();
}

}  // namespace inversevis

#endif  // INVERSEVIS_ENERGY_HPP
