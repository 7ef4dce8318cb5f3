#ifndef INVERSEVIS_RENDER_HPP
#define INVERSEVIS_RENDER_HPP

#include "energy.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace inversevis {

using Color = Vec3;  // linear RGB in [0, 1]

/// Diverging map: blue (0,0,1) at 0, white at 0.5, red (1,0,0) at 1,
/// linear in between. Inputs are clamped to [0, 1].
inline Color colormap(double s)
{
  s = std::clamp(std::isfinite(s) ? s : 0.0, 0.0, 1.0);
  if (s <= 0.5) {
    const double t = s / 0.5;
    return {t, t, 1.0};
  }
  const double t = (s - 0.5) / 0.5;
  return {1.0, 1.0 - t, 1.0 - t};
}

inline constexpr double kAmbient = 0.2;

/// Light from the camera's upper left, tilted toward the viewer.
inline Vec3 default_light(const Camera& cam) { return (cam.up - cam.right - cam.look).normalized(); }

/// ambient + (1 - ambient) * max(0, n.l), with the diffuse part dropped when
/// a ray toward the light is blocked. n is the normalized field gradient.
inline double shading_intensity(const Scene& scene, const Vec3& position, const Vec3& light_dir)
{
  const Vec3 g = scene.grid.gradient(position);
  if (!(g.norm() > 0.0)) return kAmbient;
  const Vec3 n = g.normalized();
  double diffuse = std::max(0.0, n.dot(light_dir));
  if (diffuse > 0.0) {
    const Ray shadow{position + 3.0 * scene.trace.hit_tolerance * n, light_dir};
    if (sphere_trace(scene.grid, shadow, scene.trace).found) diffuse = 0.0;
  }
  return kAmbient + (1.0 - kAmbient) * diffuse;
}

inline Color shade(const Scene& scene, const Hit& hit, const Vec3& light_dir, const Color& base)
{
  return base * shading_intensity(scene, hit.point.position, light_dir);
}

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

/// 8-bit RGB, row-major from the top-left pixel.
struct Image {
  static constexpr int kMinSide = 16;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h)
  {
    if (w < kMinSide || h < kMinSide) throw ConfigError("image dimensions must be at least 16");
    rgb.assign(static_cast<std::size_t>(w) * h * 3, 0);
  }

  void set(int px, int py, const Color& c)
  {
    std::uint8_t* p = &rgb[(static_cast<std::size_t>(py) * width + px) * 3];
    for (int k = 0; k < 3; ++k) p[k] = static_cast<std::uint8_t>(std::lround(std::clamp(c[k], 0.0, 1.0) * 255.0));
  }
  std::array<std::uint8_t, 3> get(int px, int py) const
  {
    const std::uint8_t* p = &rgb[(static_cast<std::size_t>(py) * width + px) * 3];
    return {p[0], p[1], p[2]};
  }
};

/// Opens `path` for binary writing. Existing files are kept unless `force`.
inline std::ofstream open_output(const std::filesystem::path& path, bool force)
{
  if (!force && std::filesystem::exists(path)) {
    throw IoError("refusing to overwrite " + path.string() + " (use --force)");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

/// Binary PPM: "P6\n<w> <h>\n255\n" then raw RGB.
inline void write_ppm(const Image& image, const std::filesystem::path& path, bool force = false)
{
  std::ofstream out = open_output(path, force);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

inline Image read_ppm(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P6" || maxval != 255) throw IoError("not an 8-bit binary PPM: " + path.string());
  in.get();
  Image img(w, h);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!in) throw IoError("truncated PPM: " + path.string());
  return img;
}

// ---------------------------------------------------------------------------
// Frame to image
// ---------------------------------------------------------------------------

struct RenderOptions {
  bool rim = true;  // darken the border of the indirect region
  double rim_darkening = 0.15;
  std::optional<Vec3> light;  // default_light(camera) when empty
  Color background = Color::Constant(0.1);
};

struct RenderCounts {
  int shaded_direct = 0;
  int painted_indirect = 0;
  int background = 0;
};

/// Direct pixels: shaded colormapped scalar. Indirect pixels with a hit:
/// unshaded colormapped scalar, darkened where a 4-neighbour has another
/// class. Everything else: background.
inline Image render_image(const Scene& scene, const Frame& frame, const RenderOptions& opt = {},
                          RenderCounts* counts = nullptr)
{
  Image img(frame.width, frame.height);
  const Vec3 light = opt.light ? opt.light->normalized() : default_light(frame.camera);
  const int W = frame.width, H = frame.height;
  auto cls = [&](int x, int y) {
    return (x < 0 || y < 0 || x >= W || y >= H) ? PixelClass::none : frame.at(x, y).cls;
  };
  int direct = 0, indirect = 0, background = 0;

#pragma omp parallel for schedule(dynamic, 8) reduction(+ : direct, indirect, background)
  for (int py = 0; py < H; ++py) {
    for (int px = 0; px < W; ++px) {
      const PixelRecord& p = frame.at(px, py);
      if (p.cls == PixelClass::none || !p.hit.found) {
        img.set(px, py, opt.background);
        ++background;
        continue;
      }
      const Color base = colormap(barycentric_scalar(scene.mesh, p.hit.point.triangle, p.hit.point.bary));
      if (p.cls == PixelClass::direct) {
        img.set(px, py, shade(scene, p.hit, light, base));
        ++direct;
        continue;
      }
      const bool border = cls(px - 1, py) != p.cls || cls(px + 1, py) != p.cls || cls(px, py - 1) != p.cls ||
                          cls(px, py + 1) != p.cls;
      img.set(px, py, opt.rim && border ? Color(base * (1.0 - opt.rim_darkening)) : base);
      ++indirect;
    }
  }
  if (counts) *counts = {direct, indirect, background};
  return img;
}

struct RenderResult {
  Frame frame;
  Image image;
  EnergyReport report;
};

inline RenderResult render(const Scene& scene, const Camera& camera, int width, int height,
                           const TechniqueParams& technique, const ImportanceField& importance, double gamma,
                           VisibilityGrid* vis, const RenderOptions& opt = {})
{
  importance.validate(scene.mesh);
  RenderResult r;
  r.frame = trace_frame(scene, camera, width, height, technique);
  r.image = render_image(scene, r.frame, opt);
  r.report = energy(r.frame, scene.mesh, importance, gamma, vis);
  return r;
}

}  // namespace inversevis

#endif  // INVERSEVIS_RENDER_HPP
