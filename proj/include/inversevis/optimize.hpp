#ifndef INVERSEVIS_OPTIMIZE_HPP
#define INVERSEVIS_OPTIMIZE_HPP

#include "energy.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace inversevis {

inline constexpr double kGoldenRatio = 1.6180339887498948482;  // (1 + sqrt 5) / 2

// ---------------------------------------------------------------------------
// Golden-section line search
// ---------------------------------------------------------------------------

struct LineSearchConfig {
  double lo = 0.0;
  double hi = 0.25;
  double stop_length = 0.01;

  void validate() const
  {
    if (!(stop_length > 0.0)) throw ConfigError("line search stop length must be positive");
    if (!(hi > lo)) throw ConfigError("line search interval must be nonempty");
  }
};

struct LineSearchResult {
  double x = 0.0;  // midpoint of the final bracket
  int evaluations = 0;
};

/// Upper bound on the probes golden_section_max spends on `config`.
inline int golden_section_probe_bound(const LineSearchConfig& config)
{
  return 3 + static_cast<int>(std::ceil(std::log((config.hi - config.lo) / config.stop_length) /
                                        std::log(kGoldenRatio)));
}

/// Maximizes `f` over [lo, hi]. Each shrink keeps the side of the larger
/// inner probe and reuses the surviving probe, so one new evaluation is
/// spent per iteration.
inline LineSearchResult golden_section_max(const std::function<double(double)>& f,
                                           const LineSearchConfig& config = {})
{
  config.validate();
  LineSearchResult r;
  double x1 = config.lo, x4 = config.hi;
  double x2 = x4 - (x4 - x1) / kGoldenRatio;
  double x3 = x1 + (x4 - x1) / kGoldenRatio;
  double f2 = f(x2), f3 = f(x3);
  r.evaluations = 2;
  while (x4 - x1 >= config.stop_length) {
    if (f2 > f3) {
      x4 = x3;
      x3 = x2;
      f3 = f2;
      x2 = x4 - (x4 - x1) / kGoldenRatio;
      f2 = f(x2);
    } else {
      x1 = x2;
      x2 = x3;
      f2 = f3;
      x3 = x1 + (x4 - x1) / kGoldenRatio;
      f3 = f(x3);
    }
    ++r.evaluations;
  }
  r.x = 0.5 * (x1 + x4);
  return r;
}

// ---------------------------------------------------------------------------
// Energy evaluation at a fixed camera
// ---------------------------------------------------------------------------

/// Scores techniques at one camera. Straight hits and hull seeds are reused
/// across evaluations through the underlying FrameTracer.
class EnergyEvaluator {
public:
  EnergyEvaluator(const Scene& scene, const Camera& camera, int width, int height, ImportanceField importance,
                  double gamma, VisibilityGrid* vis)
      : scene_(&scene), tracer_(scene, camera, width, height), importance_(std::move(importance)), gamma_(gamma),
        vis_(vis)
  {
    importance_.validate(scene.mesh);
    if (importance_.mode == ImportanceMode::visibility && !vis) {
      throw ConfigError("visibility energy needs a visibility grid");
    }
  }

  const Scene& scene() const { return *scene_; }
  const Camera& camera() const { return tracer_.camera(); }
  const ImportanceField& importance() const { return importance_; }
  double gamma() const { return gamma_; }
  VisibilityGrid* visibility() const { return vis_; }
  int renders() const { return renders_; }

  Frame frame(const TechniqueParams& technique, bool want_alpha_gradient = false)
  {
    ++renders_;
    return tracer_.trace(technique, want_alpha_gradient);
  }

  EnergyReport score(const Frame& f) const { return energy(f, scene_->mesh, importance_, gamma_, vis_); }
  EnergyReport evaluate(const TechniqueParams& technique) { return score(frame(technique)); }

private:
  const Scene* scene_;
  FrameTracer tracer_;
  ImportanceField importance_;
  double gamma_;
  VisibilityGrid* vis_;
  int renders_ = 0;
};

// ---------------------------------------------------------------------------
// Gradient ascent with a golden-section step
// ---------------------------------------------------------------------------

enum class GradientMode { analytic, fd };

inline GradientMode parse_gradient_mode(const std::string& s)
{
  if (s == "analytic") return GradientMode::analytic;
  if (s == "fd") return GradientMode::fd;
  throw ConfigError("unknown gradient mode '" + s + "'");
}

struct AscentConfig {
  LineSearchConfig line;
  int max_iterations = 100;
  double fd_epsilon = 0.025;
  double min_alpha = 1e-4;
};

/// One ascent iteration. `params` and `energy` are the state before the
/// step; `best_energy` is the best seen once the step has been evaluated.
struct AscentRecord {
  int iteration = 0;
  std::vector<double> params;
  double energy = 0.0;
  std::vector<double> gradient;
  double step = 0.0;
  std::vector<double> candidate;
  double candidate_energy = 0.0;
  bool clamped = false;
  bool accepted = false;
  double best_energy = 0.0;
};

struct AscentResult {
  Eigen::VectorXd params;
  EnergyReport report;
  std::vector<AscentRecord> trace;
  int renders = 0;
};

namespace detail {

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct AscentProblem {
  std::function<EnergyReport(const Eigen::VectorXd&)> evaluate;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> gradient;  // (x, E(x))
  std::function<bool(Eigen::VectorXd&)> project;                           // true when clamped
};

/// x <- x + h grad E with h from a golden-section search; stops once the
/// stepped energy falls below the current one, the step no longer moves x,
/// or the iteration budget runs out. Returns the best point seen.
inline AscentResult gradient_ascent(const AscentProblem& p, Eigen::VectorXd x, const AscentConfig& cfg)
{
  AscentResult out;
  bool clamped = p.project(x);
  EnergyReport current = p.evaluate(x);
  out.params = x;
  out.report = current;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    AscentRecord rec;
    rec.iteration = it;
    rec.params = to_std(x);
    rec.energy = current.total;
    const Eigen::VectorXd g = p.gradient(x, current.total);
    rec.gradient = to_std(g);

    auto stepped = [&](double h, bool* was_clamped) {
      Eigen::VectorXd y = x + h * g;
      const bool c = p.project(y);
      if (was_clamped) *was_clamped = c;
      return y;
    };
    // A probe that beats the bracket midpoint replaces it as the step.
    double probe_h = 0.0, probe_e = -std::numeric_limits<double>::infinity();
    EnergyReport probe_report;
    const LineSearchResult line = golden_section_max(
        [&](double h) {
          const EnergyReport r = p.evaluate(stepped(h, nullptr));
          if (r.total > probe_e) {
            probe_h = h;
            probe_e = r.total;
            probe_report = r;
          }
          return r.total;
        },
        cfg.line);
    EnergyReport next = p.evaluate(stepped(line.x, nullptr));
    rec.step = line.x;
    if (probe_e > next.total) {
      rec.step = probe_h;
      next = probe_report;
    }
    const Eigen::VectorXd y = stepped(rec.step, &clamped);
    rec.clamped = clamped;
    rec.candidate = to_std(y);
    rec.candidate_energy = next.total;
    rec.accepted = next.total >= current.total && y != x;
    if (next.total > out.report.total) {
      out.params = y;
      out.report = next;
    }
    rec.best_energy = out.report.total;
    out.trace.push_back(std::move(rec));
    if (!out.trace.back().accepted) break;
    x = y;
    current = next;
  }
  return out;
}

}  // namespace detail

struct AlphaResult {
  InverseVisParams params;
  EnergyReport report;
  std::vector<AscentRecord> trace;
  int renders = 0;
};

/// Gradient ascent on alpha from `start`. Visibility energy has no surface
/// gradient, so it always uses forward differences.
inline AlphaResult optimize_alpha(EnergyEvaluator& eval, const InverseVisParams& start,
                                  GradientMode mode = GradientMode::analytic, const AscentConfig& cfg = {})
{
  validate(start);
  const int renders0 = eval.renders();
  auto params_at = [&](const Eigen::VectorXd& x) { return InverseVisParams{x[0], start.phi0}; };
  const bool analytic = mode == GradientMode::analytic && eval.importance().mode != ImportanceMode::visibility;

  detail::AscentProblem p;
  p.evaluate = [&](const Eigen::VectorXd& x) { return eval.evaluate(params_at(x)); };
  p.project = [&](Eigen::VectorXd& x) {
    if (x[0] >= cfg.min_alpha) return false;
    x[0] = cfg.min_alpha;
    return true;
  };
  p.gradient = [&](const Eigen::VectorXd& x, double e) {
    Eigen::VectorXd g(1);
    if (analytic) {
      g[0] = energy_alpha_gradient(eval.frame(params_at(x), true), eval.scene().mesh, eval.importance());
    } else {
      g[0] = (eval.evaluate(InverseVisParams{x[0] + cfg.fd_epsilon, start.phi0}).total - e) / cfg.fd_epsilon;
    }
    return g;
  };

  Eigen::VectorXd x0(1);
  x0[0] = start.alpha;
  const AscentResult r = detail::gradient_ascent(p, x0, cfg);
  return {params_at(r.params), r.report, r.trace, eval.renders() - renders0};
}

struct MirrorResult {
  MirrorParams params;
  EnergyReport report;
  std::vector<AscentRecord> trace;
  int renders = 0;
};

/// Forward-difference ascent on the five mirror coefficients; offset and
/// extent stay fixed.
inline MirrorResult optimize_mirror(EnergyEvaluator& eval, const MirrorParams& start, const AscentConfig& cfg = {})
{
  validate(start);
  const int renders0 = eval.renders();
  auto params_at = [&](const Eigen::VectorXd& x) {
    MirrorParams m = start;
    for (int i = 0; i < 5; ++i) m.omega[i] = x[i];
    return m;
  };

  detail::AscentProblem p;
  p.evaluate = [&](const Eigen::VectorXd& x) { return eval.evaluate(params_at(x)); };
  p.project = [](Eigen::VectorXd&) { return false; };
  // The step runs along the unit gradient, so h is a distance in omega.
  p.gradient = [&](const Eigen::VectorXd& x, double e) {
    Eigen::VectorXd g(5);
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd y = x;
      y[i] += cfg.fd_epsilon;
      g[i] = (eval.evaluate(params_at(y)).total - e) / cfg.fd_epsilon;
    }
    const double n = g.norm();
    return n > 0.0 ? Eigen::VectorXd(g / n) : g;
  };

  Eigen::VectorXd x0(5);
  for (int i = 0; i < 5; ++i) x0[i] = start.omega[i];
  const AscentResult r = detail::gradient_ascent(p, x0, cfg);
  return {params_at(r.params), r.report, r.trace, eval.renders() - renders0};
}

// ---------------------------------------------------------------------------
// Simulated annealing over camera angles
// ---------------------------------------------------------------------------

struct AnnealConfig {
  double T0 = 1.0;
  double cooling = 0.95;
  int steps = 100;
  double neighborhood = deg_to_rad(60.0);
  std::uint64_t seed = 1;

  void validate() const
  {
    if (!(T0 > 0.0)) throw ConfigError("initial temperature must be positive");
    if (!(cooling > 0.0 && cooling < 1.0)) throw ConfigError("cooling factor must lie in (0, 1)");
    if (steps < 0) throw ConfigError("annealing step count must be non-negative");
    if (!(neighborhood > 0.0) || neighborhood > kPi + 1e-12) {
      throw ConfigError("annealing neighborhood must lie in (0, 180] degrees");
    }
  }
};

/// Probability of moving to a candidate that changes the energy by `delta`.
inline double acceptance_probability(double delta, double temperature)
{
  if (delta >= 0.0) return 1.0;
  return std::exp(10.0 * delta / temperature);
}

/// One proposal. Step 0 is the starting camera; `temperature` is the value
/// the acceptance test used.
struct AnnealSample {
  int step = 0;
  double theta = 0.0;
  double phi = 0.0;
  double energy = 0.0;
  double temperature = 0.0;
  bool accepted = false;
};

struct AnnealResult {
  double theta = 0.0;
  double phi = 0.0;
  double energy = 0.0;
  int best_step = 0;
  std::vector<AnnealSample> log;
};

/// Folds a polar angle into [0, pi] by reflection.
inline double reflect_polar(double theta)
{
  theta = std::fmod(theta, 2.0 * kPi);
  if (theta < 0.0) theta += 2.0 * kPi;
  return theta > kPi ? 2.0 * kPi - theta : theta;
}

inline double wrap_azimuth(double phi)
{
  phi = std::fmod(phi, 2.0 * kPi);
  return phi < 0.0 ? phi + 2.0 * kPi : phi;
}

/// Maximizes `energy(theta, phi)`. The RNG draws two proposal offsets and
/// one acceptance variate per step, whatever the outcome, so logs depend on
/// the seed alone.
inline AnnealResult anneal(const std::function<double(double, double)>& energy, double theta0, double phi0,
                           const AnnealConfig& cfg = {})
{
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> offset(-cfg.neighborhood, cfg.neighborhood);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  AnnealResult r;
  double theta = reflect_polar(theta0), phi = wrap_azimuth(phi0);
  double e = energy(theta, phi);
  r.log.push_back({0, theta, phi, e, cfg.T0, true});
  r.theta = theta;
  r.phi = phi;
  r.energy = e;

  double T = cfg.T0;
  for (int step = 1; step <= cfg.steps; ++step) {
    const double dt = offset(rng), dp = offset(rng), u = unit(rng);
    const double ct = reflect_polar(theta + dt), cp = wrap_azimuth(phi + dp);
    const double ce = energy(ct, cp);
    const bool accept = u < acceptance_probability(ce - e, T);
    r.log.push_back({step, ct, cp, ce, T, accept});
    if (accept) {
      theta = ct;
      phi = cp;
      e = ce;
    }
    if (ce > r.energy) {
      r.theta = ct;
      r.phi = cp;
      r.energy = ce;
      r.best_step = step;
    }
    T *= cfg.cooling;
  }
  return r;
}

struct ViewSearchConfig {
  AnnealConfig anneal;
  int opt_res = 100;
  bool reoptimize = true;  // re-tune alpha or omega at every candidate
  int reopt_iterations = 3;
  GradientMode gradient = GradientMode::analytic;
  AscentConfig ascent;
};

struct ViewResult {
  AnnealResult anneal;
  TechniqueParams technique;                  // parameters at the best camera
  std::vector<TechniqueParams> sample_params;  // aligned with anneal.log
};

/// Anneals the camera for `technique`, scoring each candidate at
/// opt_res x opt_res.
inline ViewResult anneal_viewpoint(const Scene& scene, const TechniqueParams& technique,
                                   const ImportanceField& importance, double gamma, VisibilityGrid* vis,
                                   double theta0, double phi0, const ViewSearchConfig& cfg = {},
                                   Projection projection = Projection::orthographic)
{
  validate(technique);
  if (cfg.opt_res < 1) throw ConfigError("optimization resolution must be positive");
  ViewResult out;
  AscentConfig ascent = cfg.ascent;
  ascent.max_iterations = cfg.reopt_iterations;

  auto score = [&](double theta, double phi) {
    EnergyEvaluator eval(scene, make_camera(theta, phi, projection), cfg.opt_res, cfg.opt_res, importance, gamma,
                         vis);
    TechniqueParams used = technique;
    double e;
    if (auto* iv = std::get_if<InverseVisParams>(&technique); iv && cfg.reoptimize) {
      const AlphaResult a = optimize_alpha(eval, *iv, cfg.gradient, ascent);
      used = a.params;
      e = a.report.total;
    } else if (auto* m = std::get_if<MirrorParams>(&technique); m && cfg.reoptimize) {
      const MirrorResult mr = optimize_mirror(eval, *m, ascent);
      used = mr.params;
      e = mr.report.total;
    } else {
      e = eval.evaluate(technique).total;
    }
    out.sample_params.push_back(used);
    return e;
  };

  out.anneal = anneal(score, theta0, phi0, cfg.anneal);
  out.technique = out.sample_params[out.anneal.best_step];
  return out;
}

}  // namespace inversevis

#endif  // INVERSEVIS_OPTIMIZE_HPP
