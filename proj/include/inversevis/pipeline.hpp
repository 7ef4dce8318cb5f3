#ifndef INVERSEVIS_PIPELINE_HPP
#define INVERSEVIS_PIPELINE_HPP

// Glue shared by the command-line tool and the acceptance suite: mesh
// sources, scene construction and the benchmark table.

#include "primitives.hpp"
#include "report.hpp"

#include <string>
#include <vector>

namespace inversevis {

inline constexpr const char* kBuiltinPrefix = "builtin:";

/// "builtin:<name>" selects a procedural mesh as is; anything else is a
/// PLY/OFF path, normalized after loading.
inline Mesh load_mesh_source(const std::string& source, const std::optional<std::filesystem::path>& scalars = {})
{
  if (source.rfind(kBuiltinPrefix, 0) == 0) {
    Mesh m = primitives::by_name(source.substr(std::string(kBuiltinPrefix).size()));
    if (scalars) {
      m.scalars = read_scalar_sidecar(*scalars);
      m.validate();
    }
    return m;
  }
  return normalize(load_mesh(source, scalars));
}

/// Display name: the builtin name or the file stem.
inline std::string mesh_label(const std::string& source)
{
  if (source.rfind(kBuiltinPrefix, 0) == 0) return source.substr(std::string(kBuiltinPrefix).size());
  return std::filesystem::path(source).stem().string();
}

/// Cache file for a mesh within `dir`, keyed by content and resolution.
inline std::filesystem::path grid_cache_path(const std::filesystem::path& dir, const Mesh& mesh, int res)
{
  char name[64];
  std::snprintf(name, sizeof name, "%016llx-%d.ivsdf", static_cast<unsigned long long>(content_hash(mesh)), res);
  return dir / name;
}

inline Scene make_scene(Mesh mesh, int sdf_res, const std::optional<std::filesystem::path>& cache_dir = {})
{
  if (sdf_res < 16) throw ConfigError("SDF resolution must be at least 16");
  std::optional<std::filesystem::path> cache;
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    cache = grid_cache_path(*cache_dir, mesh, sdf_res);
  }
  return Scene::build(std::move(mesh), sdf_res, cache);
}

struct BenchmarkRow {
  std::string mesh;
  std::string technique;
  double visibility = 0.0;
  double frontface = 0.0;
  double theta = 0.0;  // best camera, radians
  double phi = 0.0;
  TechniqueParams params;
};

struct BenchmarkConfig {
  ViewSearchConfig search;
  int res = 256;      // final render
  int vis_res = 0;    // 0 = SDF resolution
  double theta0 = kPi / 2;
  double phi0 = 0.0;
};

/// Anneals the camera for visibility energy, then renders once at `res`
/// and reads the visibility and direct-only front-face ratios off it.
inline BenchmarkRow benchmark_one(const Scene& scene, const std::string& mesh_name, const TechniqueParams& technique,
                                  const BenchmarkConfig& cfg)
{
  VisibilityGrid vis = mark_voxels(scene.grid, cfg.vis_res);
  const ImportanceField field = ImportanceField::visibility_field();
  const ViewResult view = anneal_viewpoint(scene, technique, field, 1.0, &vis, cfg.theta0, cfg.phi0, cfg.search);
  const Camera cam = make_camera(view.anneal.theta, view.anneal.phi);
  const Frame frame = trace_frame(scene, cam, cfg.res, cfg.res, view.technique);
  const EnergyReport r = energy(frame, scene.mesh, field, 1.0, &vis);
  return {mesh_name, technique_name(technique), r.visibility, r.frontface, view.anneal.theta, view.anneal.phi,
          view.technique};
}

inline std::string benchmark_csv(const std::vector<BenchmarkRow>& rows)
{
  std::string out = "mesh,technique,visibility,frontface\n";
  for (const auto& r : rows) {
    out += r.mesh + ',' + r.technique + ',' + format_number(r.visibility) + ',' + format_number(r.frontface) + '\n';
  }
  return out;
}

}  // namespace inversevis

#endif  // INVERSEVIS_PIPELINE_HPP
