// Command-line front end: render, optimize and benchmark runs over one mesh
// (or a list, for benchmark). Exit codes: 0 ok, 2 configuration error,
// 3 I/O error, 4 numerical failure.

#include <inversevis/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace iv = inversevis;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kIo = 3, kNumerical = 4 };

struct Options {
  std::string mesh = "builtin:sphere";
  std::string scalars;
  std::string technique = "inversevis";
  double theta = 90.0;
  double phi = 0.0;
  std::string projection = "ortho";
  int res = 256;
  int opt_res = 100;
  int sdf_res = 128;
  int vis_res = 0;
  double gamma = 1.0;
  std::string energy = "scalar";
  std::uint64_t seed = 1;
  std::string out;
  std::string report;
  std::string samples;
  std::string cache_dir;
  bool force = false;
  bool no_rim = false;
  std::vector<double> light;

  double alpha = 0.5;
  double phi0 = 0.4;
  std::vector<double> omega{0, 0, 0, 0, 0};
  double mirror_offset = 1.0;
  double r1 = -1.0;
  double r2 = 1.0;

  std::string gradient = "analytic";
  int max_iter = 100;
  int anneal_steps = 100;
  double cooling = 0.95;
  bool no_reopt = false;
  int reopt_iter = 3;

  std::vector<std::string> meshes{"builtin:sphere", "builtin:torus"};
  std::vector<std::string> techniques{"direct", "neugebauer", "mirror", "inversevis"};
};

void add_scene_flags(CLI::App* app, Options& o)
{
  app->add_option("--mesh", o.mesh, "PLY/OFF path or builtin:<sphere|box|torus|trefoil|blob>");
  app->add_option("--scalars", o.scalars, "per-vertex scalar sidecar (one value per line)");
  app->add_option("--sdf-res", o.sdf_res, "distance grid resolution per axis");
  app->add_option("--cache-dir", o.cache_dir, "directory for cached distance grids");
}

void add_view_flags(CLI::App* app, Options& o)
{
  app->add_option("--technique", o.technique, "direct, neugebauer, mirror or inversevis");
  app->add_option("--theta", o.theta, "camera polar angle in degrees");
  app->add_option("--phi", o.phi, "camera azimuth in degrees");
  app->add_option("--proj", o.projection, "ortho or persp");
  app->add_option("--res", o.res, "output image side in pixels");
  app->add_option("--vis-res", o.vis_res, "visibility grid resolution (0 = SDF resolution)");
  app->add_option("--gamma", o.gamma, "weight of the direct energy term");
  app->add_option("--energy", o.energy, "scalar or visibility");
  app->add_option("--seed", o.seed, "RNG seed");
  app->add_option("--out", o.out, "output image (PPM)");
  app->add_option("--report", o.report, "output JSON report (stdout when omitted)");
  app->add_flag("--force", o.force, "overwrite existing outputs");
  app->add_flag("--no-rim", o.no_rim, "do not darken the indirect border");
  app->add_option("--light", o.light, "light direction x y z")->expected(3);
  app->add_option("--alpha", o.alpha, "initial velocity scale for curved rays");
  app->add_option("--phi0", o.phi0, "hull isovalue");
  app->add_option("--omega", o.omega, "five mirror coefficients")->expected(5);
  app->add_option("--mirror-offset", o.mirror_offset, "mirror distance behind the bounding sphere");
  app->add_option("--r1", o.r1, "inner ring radius in NDC (<= 0: silhouette)");
  app->add_option("--r2", o.r2, "outer ring radius in NDC");
}

void add_ascent_flags(CLI::App* app, Options& o)
{
  app->add_option("--opt-res", o.opt_res, "image side used while optimizing");
  app->add_option("--gradient", o.gradient, "analytic or fd (alpha only)");
  app->add_option("--max-iter", o.max_iter, "ascent iteration budget");
}

void add_anneal_flags(CLI::App* app, Options& o)
{
  app->add_option("--anneal-steps", o.anneal_steps, "annealing proposals");
  app->add_option("--cooling", o.cooling, "temperature factor per step");
  app->add_flag("--no-reopt", o.no_reopt, "keep alpha / omega fixed per candidate");
  app->add_option("--reopt-iter", o.reopt_iter, "ascent steps per candidate");
  app->add_option("--samples", o.samples, "sample log CSV");
}

std::optional<std::filesystem::path> opt_path(const std::string& s)
{
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

iv::Scene load_scene(const Options& o, const std::string& mesh_source)
{
  return iv::make_scene(iv::load_mesh_source(mesh_source, opt_path(o.scalars)), o.sdf_res, opt_path(o.cache_dir));
}

iv::TechniqueParams technique_from(const Options& o, const std::string& name)
{
  iv::TechniqueParams t = iv::default_technique(name);
  if (auto* n = std::get_if<iv::NeugebauerParams>(&t)) {
    n->r1 = o.r1;
    n->r2 = o.r2;
  } else if (auto* m = std::get_if<iv::MirrorParams>(&t)) {
    if (o.omega.size() != 5) throw iv::ConfigError("--omega needs five values");
    for (int i = 0; i < 5; ++i) m->omega[i] = o.omega[i];
    m->offset = o.mirror_offset;
  } else if (auto* p = std::get_if<iv::InverseVisParams>(&t)) {
    p->alpha = o.alpha;
    p->phi0 = o.phi0;
  }
  iv::validate(t);
  return t;
}

void check_common(const Options& o)
{
  if (o.res < iv::Image::kMinSide || o.opt_res < iv::Image::kMinSide) {
    throw iv::ConfigError("resolutions must be at least 16");
  }
  if (o.vis_res != 0 && o.vis_res < 16) throw iv::ConfigError("visibility resolution must be at least 16");
  if (!(o.gamma >= 0.0)) throw iv::ConfigError("gamma must be non-negative");
  if (o.energy != "scalar" && o.energy != "visibility") throw iv::ConfigError("--energy must be scalar or visibility");
}

iv::Camera camera_from(const Options& o, double theta_rad, double phi_rad)
{
  return iv::make_camera(theta_rad, phi_rad, iv::parse_projection(o.projection));
}

iv::RenderOptions render_options(const Options& o)
{
  iv::RenderOptions r;
  r.rim = !o.no_rim;
  if (!o.light.empty()) r.light = iv::Vec3(o.light[0], o.light[1], o.light[2]);
  return r;
}

iv::ImportanceField importance_from(const Options& o)
{
  return o.energy == "visibility" ? iv::ImportanceField::visibility_field() : iv::ImportanceField::scalar_field();
}

/// Final render at --res plus its report; `extra` is merged into the JSON.
int finish(const Options& o, const iv::Scene& scene, const iv::Camera& cam, const iv::TechniqueParams& t,
           iv::VisibilityGrid& vis, iv::Json extra = iv::Json::object())
{
  const iv::RenderResult r =
      iv::render(scene, cam, o.res, o.res, t, importance_from(o), o.gamma, &vis, render_options(o));
  iv::Json j = iv::energy_report_json(t, cam, r.report);
  for (auto& [k, v] : extra.items()) j[k] = v;
  if (!o.out.empty()) iv::write_ppm(r.image, o.out, o.force);
  if (!o.report.empty()) iv::write_json(j, o.report, o.force);
  else std::cout << j.dump(2) << "\n";
  return kOk;
}

int run_render(const Options& o)
{
  check_common(o);
  const iv::Scene scene = load_scene(o, o.mesh);
  iv::VisibilityGrid vis = iv::mark_voxels(scene.grid, o.vis_res);
  return finish(o, scene, camera_from(o, iv::deg_to_rad(o.theta), iv::deg_to_rad(o.phi)),
                technique_from(o, o.technique), vis);
}

iv::AscentConfig ascent_from(const Options& o)
{
  if (o.max_iter < 1) throw iv::ConfigError("--max-iter must be positive");
  iv::AscentConfig a;
  a.max_iterations = o.max_iter;
  return a;
}

int run_optimize_alpha(const Options& o)
{
  check_common(o);
  const iv::Scene scene = load_scene(o, o.mesh);
  iv::VisibilityGrid vis = iv::mark_voxels(scene.grid, o.vis_res);
  const iv::Camera cam = camera_from(o, iv::deg_to_rad(o.theta), iv::deg_to_rad(o.phi));
  const auto start = std::get<iv::InverseVisParams>(technique_from(o, "inversevis"));
  iv::EnergyEvaluator eval(scene, cam, o.opt_res, o.opt_res, importance_from(o), o.gamma, &vis);
  const iv::AlphaResult r = iv::optimize_alpha(eval, start, iv::parse_gradient_mode(o.gradient), ascent_from(o));
  iv::Json extra;
  extra["optimization"] = {{"gradient", o.gradient}, {"opt_res", o.opt_res}, {"renders", r.renders},
                           {"best_energy", r.report.total}, {"trace", iv::to_json(r.trace)}};
  return finish(o, scene, cam, r.params, vis, extra);
}

int run_optimize_mirror(const Options& o)
{
  check_common(o);
  const iv::Scene scene = load_scene(o, o.mesh);
  iv::VisibilityGrid vis = iv::mark_voxels(scene.grid, o.vis_res);
  const iv::Camera cam = camera_from(o, iv::deg_to_rad(o.theta), iv::deg_to_rad(o.phi));
  const auto start = std::get<iv::MirrorParams>(technique_from(o, "mirror"));
  iv::EnergyEvaluator eval(scene, cam, o.opt_res, o.opt_res, importance_from(o), o.gamma, &vis);
  const iv::MirrorResult r = iv::optimize_mirror(eval, start, ascent_from(o));
  iv::Json extra;
  extra["optimization"] = {{"opt_res", o.opt_res}, {"renders", r.renders}, {"best_energy", r.report.total},
                           {"trace", iv::to_json(r.trace)}};
  return finish(o, scene, cam, r.params, vis, extra);
}

iv::ViewSearchConfig view_search_from(const Options& o)
{
  iv::ViewSearchConfig v;
  v.anneal.steps = o.anneal_steps;
  v.anneal.cooling = o.cooling;
  v.anneal.seed = o.seed;
  v.opt_res = o.opt_res;
  v.reoptimize = !o.no_reopt;
  v.reopt_iterations = o.reopt_iter;
  v.gradient = iv::parse_gradient_mode(o.gradient);
  return v;
}

int run_optimize_view(const Options& o)
{
  check_common(o);
  const iv::Scene scene = load_scene(o, o.mesh);
  iv::VisibilityGrid vis = iv::mark_voxels(scene.grid, o.vis_res);
  const iv::ViewResult r =
      iv::anneal_viewpoint(scene, technique_from(o, o.technique), importance_from(o), o.gamma, &vis,
                           iv::deg_to_rad(o.theta), iv::deg_to_rad(o.phi), view_search_from(o),
                           iv::parse_projection(o.projection));
  if (!o.samples.empty()) iv::write_text(iv::anneal_samples_csv(r.anneal), o.samples, o.force);
  iv::Json extra;
  extra["anneal"] = iv::to_json(r.anneal);
  extra["anneal"]["seed"] = o.seed;
  return finish(o, scene, camera_from(o, r.anneal.theta, r.anneal.phi), r.technique, vis, extra);
}

int run_benchmark(const Options& o)
{
  check_common(o);
  iv::BenchmarkConfig cfg;
  cfg.search = view_search_from(o);
  cfg.res = o.res;
  cfg.vis_res = o.vis_res;
  cfg.theta0 = iv::deg_to_rad(o.theta);
  cfg.phi0 = iv::deg_to_rad(o.phi);
  std::vector<iv::BenchmarkRow> rows;
  for (const auto& m : o.meshes) {
    const iv::Scene scene = load_scene(o, m);
    for (const auto& t : o.techniques) {
      rows.push_back(iv::benchmark_one(scene, iv::mesh_label(m), technique_from(o, t), cfg));
    }
  }
  const std::string csv = iv::benchmark_csv(rows);
  if (!o.out.empty()) iv::write_text(csv, o.out, o.force);
  else std::cout << csv;
  return kOk;
}

int run_build_sdf(const Options& o)
{
  if (o.out.empty()) throw iv::ConfigError("build-sdf needs --out");
  if (o.sdf_res < 16) throw iv::ConfigError("SDF resolution must be at least 16");
  const iv::Mesh mesh = iv::load_mesh_source(o.mesh, opt_path(o.scalars));
  const iv::SdfGrid grid = iv::build_grid(mesh, o.sdf_res);
  if (!o.force && std::filesystem::exists(o.out)) {
    throw iv::IoError("refusing to overwrite " + o.out + " (use --force)");
  }
  iv::save_grid_cache(grid, o.out);
  std::cout << "wrote " << o.out << " (" << o.sdf_res << "^3 voxels)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Headless surface renderer revealing occluded backsides"};
  app.require_subcommand(1);
  Options o;

  CLI::App* render = app.add_subcommand("render", "render one view and report its energy");
  CLI::App* alpha = app.add_subcommand("optimize-alpha", "gradient ascent on the curved-ray alpha");
  CLI::App* mirror = app.add_subcommand("optimize-mirror", "gradient ascent on the mirror coefficients");
  CLI::App* view = app.add_subcommand("optimize-view", "simulated annealing over camera angles");
  CLI::App* bench = app.add_subcommand("benchmark", "visibility table over meshes and techniques");
  CLI::App* sdf = app.add_subcommand("build-sdf", "build and store a distance grid");

  for (CLI::App* sub : {render, alpha, mirror, view, bench, sdf}) add_scene_flags(sub, o);
  for (CLI::App* sub : {render, alpha, mirror, view, bench}) add_view_flags(sub, o);
  for (CLI::App* sub : {alpha, mirror, view, bench}) add_ascent_flags(sub, o);
  for (CLI::App* sub : {view, bench}) add_anneal_flags(sub, o);
  sdf->add_option("--out", o.out, "output grid file")->required();
  sdf->add_flag("--force", o.force, "overwrite an existing file");
  bench->add_option("--meshes", o.meshes, "mesh sources");
  bench->add_option("--techniques", o.techniques, "techniques to compare");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*render) return run_render(o);
    if (*alpha) return run_optimize_alpha(o);
    if (*mirror) return run_optimize_mirror(o);
    if (*view) return run_optimize_view(o);
    if (*bench) return run_benchmark(o);
    if (*sdf) return run_build_sdf(o);
  } catch (const iv::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const iv::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const iv::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
