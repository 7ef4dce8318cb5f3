#ifndef INVERSEVIS_FRAME_HPP
#define INVERSEVIS_FRAME_HPP

#include "techniques.hpp"

#include <vector>

namespace inversevis {

struct PixelRecord {
  PixelClass cls = PixelClass::none;
  Hit hit;  // hit.found may be false for an indirect pixel the technique claimed
};

struct Census {
  int direct = 0;
  int indirect = 0;
  int indirect_hits = 0;
  int none = 0;
};

/// One traced image: pixels in row-major order, row 0 at the top.
struct Frame {
  int width = 0;
  int height = 0;
  Camera camera;
  std::vector<PixelRecord> pixels;

  const PixelRecord& at(int px, int py) const { return pixels[static_cast<std::size_t>(py) * width + px]; }
  double pixel_area() const { return 4.0 / (static_cast<double>(width) * height); }

  Census census() const
  {
    Census c;
    for (const auto& p : pixels) {
      if (p.cls == PixelClass::direct) ++c.direct;
      else if (p.cls == PixelClass::indirect) {
        ++c.indirect;
        if (p.hit.found) ++c.indirect_hits;
      } else ++c.none;
    }
    return c;
  }
};

/// Traces frames for one scene and camera. Straight-ray hits and hull seeds
/// do not depend on the technique's tunable parameters, so they are traced
/// once and reused across calls.
class FrameTracer {
public:
  FrameTracer(const Scene& scene, const Camera& camera, int width, int height)
      : scene_(&scene), camera_(camera), width_(width), height_(height)
  {
    if (width < 1 || height < 1) throw ConfigError("image dimensions must be positive");
  }

  const Camera& camera() const { return camera_; }
  int width() const { return width_; }
  int height() const { return height_; }

  Frame trace(const TechniqueParams& technique, bool want_alpha_gradient = false)
  {
    validate(technique);
    ensure_direct();
    Frame frame;
    frame.width = width_;
    frame.height = height_;
    frame.camera = camera_;
    frame.pixels.resize(direct_.size());

    const InverseVisParams* iv = std::get_if<InverseVisParams>(&technique);
    if (iv) ensure_hull(iv->phi0);
    NeugebauerParams ring;
    if (auto* n = std::get_if<NeugebauerParams>(&technique)) ring = resolve_ring(*n, scene_->mesh, camera_);

    const int n = width_ * height_;
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n; ++i) {
      PixelRecord& rec = frame.pixels[i];
      if (direct_[i].found) {
        rec.cls = PixelClass::direct;
        rec.hit = direct_[i];
        continue;
      }
      std::optional<Hit> mapped;
      const Vec2 ndc = pixel_ndc(i % width_, i / width_, width_, height_);
      if (std::holds_alternative<NeugebauerParams>(technique)) {
        mapped = neugebauer_map(*scene_, camera_, ndc, ring);
      } else if (auto* m = std::get_if<MirrorParams>(&technique)) {
        mapped = mirror_map(*scene_, camera_, pixel_ray(camera_, ndc), *m);
      } else if (iv && hull_[i]) {
        mapped = inversevis_from_seed(*scene_, *hull_[i], iv->alpha, want_alpha_gradient);
      }
      if (mapped) {
        rec.cls = PixelClass::indirect;
        rec.hit = *mapped;
      }
    }
    return frame;
  }

private:
  void ensure_direct()
  {
    if (!direct_.empty()) return;
    const int n = width_ * height_;
    direct_.resize(n);
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n; ++i) {
      direct_[i] = trace_straight(*scene_, pixel_ray(camera_, pixel_ndc(i % width_, i / width_, width_, height_)));
    }
  }

  void ensure_hull(double phi0)
  {
    if (!hull_.empty() && hull_phi0_ == phi0) return;
    const int n = width_ * height_;
    hull_.assign(n, std::nullopt);
    hull_phi0_ = phi0;
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n; ++i) {
      if (direct_[i].found) continue;
      hull_[i] = hull_seed(*scene_, pixel_ray(camera_, pixel_ndc(i % width_, i / width_, width_, height_)), phi0);
    }
  }

  const Scene* scene_;
  Camera camera_;
  int width_, height_;
  std::vector<Hit> direct_;
  std::vector<std::optional<HullSeed>> hull_;
  double hull_phi0_ = 0.0;
};

inline Frame trace_frame(const Scene& scene, const Camera& camera, int width, int height,
                         const TechniqueParams& technique, bool want_alpha_gradient = false)
{
  FrameTracer tracer(scene, camera, width, height);
  return tracer.trace(technique, want_alpha_gradient);
}

/// Per-pixel classes in row-major order.
inline std::vector<PixelClass> classify_pixels(const Scene& scene, const Camera& camera, int width, int height,
                                               const TechniqueParams& technique)
{
  const Frame f = trace_frame(scene, camera, width, height, technique);
  std::vector<PixelClass> out(f.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f.pixels[i].cls;
  return out;
}

}  // namespace inversevis

#endif  // INVERSEVIS_FRAME_HPP
