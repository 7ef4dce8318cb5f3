#ifndef INVERSEVIS_REPORT_HPP
#define INVERSEVIS_REPORT_HPP

#include "optimize.hpp"
#include "render.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace inversevis {

using Json = nlohmann::ordered_json;

inline Json to_json(const TechniqueParams& t)
{
  Json j = Json::object();
  if (auto* n = std::get_if<NeugebauerParams>(&t)) {
    j["center"] = {n->center.x(), n->center.y(), n->center.z()};
    j["r1"] = n->r1;
    j["r2"] = n->r2;
  } else if (auto* m = std::get_if<MirrorParams>(&t)) {
    j["omega"] = m->omega;
    j["offset"] = m->offset;
    j["half_extent"] = m->half_extent;
  } else if (auto* iv = std::get_if<InverseVisParams>(&t)) {
    j["alpha"] = iv->alpha;
    j["phi0"] = iv->phi0;
  }
  return j;
}

/// Camera angles are reported in degrees, like the CLI flags.
inline Json to_json(const Camera& cam)
{
  return {{"theta", rad_to_deg(cam.theta)},
          {"phi", rad_to_deg(cam.phi_az)},
          {"projection", cam.projection == Projection::orthographic ? "orthographic" : "perspective"}};
}

inline Json to_json(const Census& c)
{
  return {{"direct", c.direct}, {"indirect", c.indirect}, {"indirect_hits", c.indirect_hits}, {"none", c.none}};
}

/// Negative visibility / frontface (no visibility grid) become null.
inline Json energy_report_json(const TechniqueParams& technique, const Camera& cam, const EnergyReport& r)
{
  auto ratio = [](double v) { return v < 0.0 ? Json(nullptr) : Json(v); };
  return {{"technique", technique_name(technique)},
          {"camera", to_json(cam)},
          {"params", to_json(technique)},
          {"direct", r.direct_term},
          {"indirect", r.indirect_term},
          {"gamma", r.gamma},
          {"total", r.total},
          {"mean_scalar", r.mean_scalar},
          {"visibility", ratio(r.visibility)},
          {"frontface", ratio(r.frontface)},
          {"census", to_json(r.census)}};
}

inline Json to_json(const std::vector<AscentRecord>& trace)
{
  Json arr = Json::array();
  for (const auto& r : trace) {
    arr.push_back({{"iteration", r.iteration},
                   {"params", r.params},
                   {"energy", r.energy},
                   {"gradient", r.gradient},
                   {"step", r.step},
                   {"candidate", r.candidate},
                   {"candidate_energy", r.candidate_energy},
                   {"clamped", r.clamped},
                   {"accepted", r.accepted},
                   {"best_energy", r.best_energy}});
  }
  return arr;
}

inline Json to_json(const AnnealResult& r)
{
  Json log = Json::array();
  for (const auto& s : r.log) {
    log.push_back({{"step", s.step},
                   {"theta", rad_to_deg(s.theta)},
                   {"phi", rad_to_deg(s.phi)},
                   {"energy", s.energy},
                   {"temperature", s.temperature},
                   {"accepted", s.accepted}});
  }
  return {{"best", {{"theta", rad_to_deg(r.theta)}, {"phi", rad_to_deg(r.phi)}, {"energy", r.energy},
                    {"step", r.best_step}}},
          {"samples", log}};
}

inline void write_text(const std::string& text, const std::filesystem::path& path, bool force)
{
  std::ofstream out = open_output(path, force);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_json(const Json& j, const std::filesystem::path& path, bool force)
{
  write_text(j.dump(2) + "\n", path, force);
}

/// Shortest text that reads back to the same double.
inline std::string format_number(double v)
{
  return Json(v).dump();
}

/// step, theta, phi (degrees), energy, temperature, accepted.
inline std::string anneal_samples_csv(const AnnealResult& r)
{
  std::string out = "step,theta,phi,energy,temperature,accepted\n";
  for (const auto& s : r.log) {
    out += std::to_string(s.step) + ',' + format_number(rad_to_deg(s.theta)) + ',' +
           format_number(rad_to_deg(s.phi)) + ',' + format_number(s.energy) + ',' + format_number(s.temperature) +
           ',' + (s.accepted ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace inversevis

#endif  // INVERSEVIS_REPORT_HPP
