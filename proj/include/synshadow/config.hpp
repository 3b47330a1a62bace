#pragma once

// Pipeline configuration file: INI-style sections of key = value pairs.
//
//   [run]      seed, workers, strategy
//   [sampler]  l1_range, s1_range, dl0_mean, dl0_std, dl2_mean, dl2_std,
//              max_resamples, gamma_range
//   [render]   width, height, light_samples
//   [scene]    camera_height, camera_tilt_deg, vfov_deg, light_distance,
//              light_elevation_deg, light_radius, occluder_scale,
//              occluder_position (all "lo, hi" ranges), occluder_count_weights
//              ("w1, w2"), max_attempts
//   [paths]    backgrounds, mattes, meshes, out
//
// Unknown sections or keys are rejected so typos do not silently fall back
// to defaults.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "csv.hpp"
#include "matte.hpp"
#include "sampler.hpp"

namespace synshadow {

struct PipelineConfig {
  SamplerConfig sampler;
  RenderSettings render;
  SceneRanges scene;
  unsigned workers = 1;
  std::filesystem::path backgrounds;
  std::filesystem::path mattes;
  std::filesystem::path meshes;
  std::filesystem::path out;

  std::uint64_t seed() const { return sampler.seed; }

  /// Checks every sub-config plus that each path that is set exists
  /// (`out` is created on demand and is exempt).
  void validate() const {
    sampler.validate();
    render.validate();
    scene.validate();
    if (workers < 1) detail::fail_validation("workers must be >= 1");
    for (const auto* p : {&backgrounds, &mattes, &meshes})
      if (!p->empty() && !std::filesystem::exists(*p))
        detail::fail_validation("path does not exist: '" + p->string() + "'");
  }
};

namespace detail {

inline Range parse_range(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string lo, hi;
  if (!std::getline(in, lo, ',') || !std::getline(in, hi))
    fail_validation("config key '" + key + "' expects 'lo, hi'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  try {
    return {csv::parse_double(trim(lo)), csv::parse_double(trim(hi))};
  } catch (const ValidationError&) {
    fail_validation("config key '" + key + "' has a non-numeric range");
  }
}

inline double parse_number(const std::string& text, const std::string& key) {
  try {
    return csv::parse_double(text);
  } catch (const ValidationError&) {
    fail_validation("config key '" + key + "' is not a number");
  }
}

inline std::uint64_t parse_unsigned(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail_validation("config key '" + key + "' is not a nonnegative integer");
  return v;
}

}  // namespace detail

inline PipelineConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    detail::fail_validation(std::string("config parse error: ") + e.what());
  }
  PipelineConfig cfg;
  auto& s = cfg.sampler;
  auto& sc = cfg.scene;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto range = [](Range& r) { return Setter([&r](const std::string& v, const std::string& k) { r = detail::parse_range(v, k); }); };
  auto number = [](double& d) { return Setter([&d](const std::string& v, const std::string& k) { d = detail::parse_number(v, k); }); };
  auto integer = [](int& i) {
    return Setter([&i](const std::string& v, const std::string& k) { i = static_cast<int>(detail::parse_unsigned(v, k)); });
  };
  auto path = [](std::filesystem::path& p) { return Setter([&p](const std::string& v, const std::string&) { p = v; }); };

  const std::map<std::string, std::map<std::string, Setter>> schema = {
      {"run",
       {{"seed", [&](const std::string& v, const std::string& k) { s.seed = detail::parse_unsigned(v, k); }},
        {"workers", [&](const std::string& v, const std::string& k) { cfg.workers = static_cast<unsigned>(detail::parse_unsigned(v, k)); }},
        {"strategy", [&](const std::string& v, const std::string&) { s.strategy = parse_strategy(v); }}}},
      {"sampler",
       {{"l1_range", range(s.l1_range)},
        {"s1_range", range(s.s1_range)},
        {"dl0_mean", number(s.dl0.mean)},
        {"dl0_std", number(s.dl0.stddev)},
        {"dl2_mean", number(s.dl2.mean)},
        {"dl2_std", number(s.dl2.stddev)},
        {"max_resamples", integer(s.max_resamples)},
        {"gamma_range", range(s.gamma_range)}}},
      {"render",
       {{"width", integer(cfg.render.width)},
        {"height", integer(cfg.render.height)},
        {"light_samples", integer(cfg.render.light_samples)}}},
      {"scene",
       {{"camera_height", range(sc.camera_height)},
        {"camera_tilt_deg", range(sc.camera_tilt_deg)},
        {"vfov_deg", range(sc.vfov_deg)},
        {"light_distance", range(sc.light_distance)},
        {"light_elevation_deg", range(sc.light_elevation_deg)},
        {"light_radius", range(sc.light_radius)},
        {"occluder_scale", range(sc.occluder_scale)},
        {"occluder_position", range(sc.occluder_position)},
        {"occluder_count_weights",
         [&](const std::string& v, const std::string& k) {
           const Range w = detail::parse_range(v, k);
           sc.occluder_count_weights = {w.lo, w.hi};
         }},
        {"max_attempts", integer(sc.max_attempts)}}},
      {"paths",
       {{"backgrounds", path(cfg.backgrounds)},
        {"mattes", path(cfg.mattes)},
        {"meshes", path(cfg.meshes)},
        {"out", path(cfg.out)}}},
  };

  for (const auto& [section, entries] : tree) {
    const auto sec = schema.find(section);
    if (sec == schema.end()) detail::fail_validation("unknown config section '" + section + "'");
    if (!entries.data().empty()) detail::fail_validation("config key '" + section + "' outside a section");
    for (const auto& [key, value] : entries) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) detail::fail_validation("unknown config key '" + section + "." + key + "'");
      setter->second(value.data(), section + "." + key);
    }
  }
  cfg.render.seed = s.seed;
  cfg.render.workers = cfg.workers;
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

inline void describe(std::ostream& os, const PipelineConfig& cfg) {
  const auto& s = cfg.sampler;
  auto r = [](const Range& x) { return "[" + csv::format_double(x.lo) + ", " + csv::format_double(x.hi) + "]"; };
  os << "seed: " << s.seed << "\n"
     << "workers: " << cfg.workers << "\n"
     << "strategy: " << to_string(s.strategy) << "\n"
     << "sampler: l1 " << r(s.l1_range) << " s1 " << r(s.s1_range) << " dl0 N(" << s.dl0.mean << ", "
     << s.dl0.stddev << ") dl2 N(" << s.dl2.mean << ", " << s.dl2.stddev << ") max_resamples " << s.max_resamples
     << "\n"
     << "render: " << cfg.render.width << "x" << cfg.render.height << ", " << cfg.render.light_samples
     << " light samples\n"
     << "scene: light radius " << r(cfg.scene.light_radius) << ", occluder scale " << r(cfg.scene.occluder_scale)
     << "\n"
     << "paths: backgrounds='" << cfg.backgrounds.string() << "' mattes='" << cfg.mattes.string() << "' meshes='"
     << cfg.meshes.string() << "' out='" << cfg.out.string() << "'\n";
}

}  // namespace synshadow
