#ifndef INVERSEVIS_SCENE_HPP
#define INVERSEVIS_SCENE_HPP

#include "ray_engine.hpp"
#include "sdf_grid.hpp"

namespace inversevis {

/// Everything a render needs that does not depend on the camera. Immutable
/// once built and shared read-only across pixel workers.
struct Scene {
  Mesh mesh;
  SdfGrid grid;
  TraceSettings trace;

  static Scene build(Mesh mesh, int sdf_resolution,
                     const std::optional<std::filesystem::path>& cache = std::nullopt)
  {
    Scene s;
    s.grid = load_or_build_grid(mesh, sdf_resolution, cache);
    s.mesh = std::move(mesh);
    return s;
  }
};

}  // namespace inversevis

#endif  // INVERSEVIS_SCENE_HPP
