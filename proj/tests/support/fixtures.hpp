#ifndef INVERSEVIS_TEST_FIXTURES_HPP
#define INVERSEVIS_TEST_FIXTURES_HPP

#include <inversevis/primitives.hpp>
#include <inversevis/scene.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace ivtest {

inline std::filesystem::path cache_dir()
{
#ifdef INVERSEVIS_TEST_CACHE_DIR
  std::filesystem::path dir = INVERSEVIS_TEST_CACHE_DIR;
#else
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "inversevis-cache";
#endif
  std::filesystem::create_directories(dir);
  return dir;
}

/// Scenes for built-in primitives, shared within a test binary and cached
/// on disk across binaries.
inline const inversevis::Scene& primitive_scene(const std::string& name, int res)
{
  static std::map<std::pair<std::string, int>, std::unique_ptr<inversevis::Scene>> scenes;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(name, res);
  auto it = scenes.find(key);
  if (it != scenes.end()) return *it->second;
  const auto path = cache_dir() / (name + "-" + std::to_string(res) + ".ivsdf");
  auto scene = std::make_unique<inversevis::Scene>(
      inversevis::Scene::build(inversevis::primitives::by_name(name), res, path));
  return *scenes.emplace(key, std::move(scene)).first->second;
}

inline const inversevis::Scene& sphere_scene(int res = 64) { return primitive_scene("sphere", res); }

/// Temporary directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir()
  {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("inversevis-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace ivtest

#endif  // INVERSEVIS_TEST_FIXTURES_HPP
