#ifndef INVERSEVIS_CLOSEST_POINT_HPP
#define INVERSEVIS_CLOSEST_POINT_HPP

#include "math.hpp"

#include <cstdint>

namespace inversevis {

/// Which feature of a triangle the closest point lies on. Edge k joins
/// corner k and corner (k+1)%3.
enum class TriangleFeature : std::uint8_t { face, vertex0, vertex1, vertex2, edge01, edge12, edge20 };

struct ClosestPoint {
  Vec3 point;
  Vec3 bary;  // weights of corners a, b, c
  double distance_sq = 0.0;
  TriangleFeature feature = TriangleFeature::face;
};

/// Closest point on triangle (a,b,c) to p, by Voronoi-region classification.
inline ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
  ClosestPoint r;
  auto finish = [&](const Vec3& bary, TriangleFeature f) {
    r.bary = bary;
    r.point = bary[0] * a + bary[1] * b + bary[2] * c;
    r.distance_sq = (p - r.point).squaredNorm();
    r.feature = f;
    return r;
  };

  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return finish({1, 0, 0}, TriangleFeature::vertex0);

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return finish({0, 1, 0}, TriangleFeature::vertex1);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return finish({1 - v, v, 0}, TriangleFeature::edge01);
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return finish({0, 0, 1}, TriangleFeature::vertex2);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return finish({1 - w, 0, w}, TriangleFeature::edge20);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return finish({0, 1 - w, w}, TriangleFeature::edge12);
  }

  const double denom = va + vb + vc;
  if (std::abs(denom) < 1e-300) {
    // Degenerate (zero-area) triangle: fall back to the nearest edge.
    ClosestPoint best;
    best.distance_sq = std::numeric_limits<double>::infinity();
    const Vec3 pts[3] = {a, b, c};
    for (int k = 0; k < 3; ++k) {
      const Vec3& s = pts[k];
      const Vec3& e = pts[(k + 1) % 3];
      const Vec3 d = e - s;
      const double len2 = d.squaredNorm();
      const double t = len2 > 0 ? std::clamp((p - s).dot(d) / len2, 0.0, 1.0) : 0.0;
      Vec3 bary = Vec3::Zero();
      bary[k] = 1 - t;
      bary[(k + 1) % 3] = t;
      ClosestPoint cand = finish(bary, static_cast<TriangleFeature>(4 + k));
      if (cand.distance_sq < best.distance_sq) best = cand;
    }
    return best;
  }
  const double v = vb / denom, w = vc / denom;
  return finish({1 - v - w, v, w}, TriangleFeature::face);
}

}  // namespace inversevis

#endif  // INVERSEVIS_CLOSEST_POINT_HPP
