#ifndef INVERSEVIS_BVH_HPP
#define INVERSEVIS_BVH_HPP

#include "closest_point.hpp"
#include "mesh.hpp"

#include <numeric>
#include <vector>

namespace inversevis {

struct TriangleQuery {
  int triangle = -1;
  ClosestPoint closest;
};

/// Exhaustive closest-triangle search. Ties resolve to the lowest index.
inline TriangleQuery closest_triangle_brute_force(const Mesh& mesh, const Vec3& p)
{
  TriangleQuery best;
  best.closest.distance_sq = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    auto cp = closest_point_on_triangle(p, mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    if (cp.distance_sq < best.closest.distance_sq) {
      best.closest = cp;
      best.triangle = static_cast<int>(t);
    }
  }
  return best;
}

/// Median-split bounding volume hierarchy over triangles for nearest-triangle
/// queries.
class TriangleBvh {
public:
  explicit TriangleBvh(const Mesh& mesh) : mesh_(&mesh)
  {
    const std::size_t n = mesh.triangles.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    boxes_.resize(n);
    centroids_.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      Eigen::AlignedBox3d box;
      for (int k = 0; k < 3; ++k) box.extend(mesh.corner(t, k));
      boxes_[t] = box;
      centroids_[t] = box.center();
    }
    if (n > 0) build(0, static_cast<int>(n));
  }

  /// Nearest triangle to p. `hint` (a triangle index or -1) seeds the upper
  /// bound, which speeds up coherent sweeps.
  TriangleQuery closest(const Vec3& p, int hint = -1) const
  {
    TriangleQuery best;
    best.closest.distance_sq = std::numeric_limits<double>::infinity();
    if (nodes_.empty()) return best;
    if (hint >= 0) {
      best.triangle = hint;
      best.closest = closest_point_on_triangle(p, mesh_->corner(hint, 0), mesh_->corner(hint, 1), mesh_->corner(hint, 2));
    }

    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.box.squaredExteriorDistance(p) > best.closest.distance_sq) continue;
      if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
          const int t = order_[i];
          auto cp = closest_point_on_triangle(p, mesh_->corner(t, 0), mesh_->corner(t, 1), mesh_->corner(t, 2));
          if (cp.distance_sq < best.closest.distance_sq ||
              (cp.distance_sq == best.closest.distance_sq && t < best.triangle)) {
            best.closest = cp;
            best.triangle = t;
          }
        }
        continue;
      }
      const Node& l = nodes_[node.left];
      const Node& r = nodes_[node.right];
      const double dl = l.box.squaredExteriorDistance(p);
      const double dr = r.box.squaredExteriorDistance(p);
      // push the farther child first so the nearer one is visited next
      if (dl < dr) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
    return best;
  }

private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1, right = -1;
    int first = 0, count = 0;
  };

  int build(int first, int last)
  {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box, cbox;
    for (int i = first; i < last; ++i) {
      box.extend(boxes_[order_[i]]);
      cbox.extend(centroids_[order_[i]]);
    }
    nodes_[id].box = box;
    const int count = last - first;
    if (count <= kLeafSize) {
      nodes_[id].first = first;
      nodes_[id].count = count;
      return id;
    }
    int axis = 0;
    cbox.sizes().maxCoeff(&axis);
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + last,
                     [&](int a, int b) { return centroids_[a][axis] < centroids_[b][axis]; });
    const int left = build(first, mid);
    const int right = build(mid, last);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static constexpr int kLeafSize = 4;

  const Mesh* mesh_;
  std::vector<int> order_;
  std::vector<Eigen::AlignedBox3d> boxes_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

}  // namespace inversevis

#endif  // INVERSEVIS_BVH_HPP
