#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dermabcd/error.hpp"
#include "dermabcd/ml.hpp"
#include "dermabcd/pipeline.hpp"

namespace dermabcd::app {

// Bad flags or configuration. Exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  PipelineConfig pipeline;
  EvaluationConfig evaluation;
  int workers = 1;

  std::uint64_t seed() const { return pipeline.seed; }
  FilterKind stream() const { return pipeline.stream; }
};

namespace detail {

using Setter = std::function<void(const nlohmann::json&)>;

template <typename T>
Setter bind(T& target) {
  return [&target](const nlohmann::json& v) { target = v.get<T>(); };
}

inline void apply_object(const nlohmann::json& obj, const std::string& where,
                         const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + "." + key + ": " + e.what());
    }
  }
}

}  // namespace detail

inline FilterKind stream_from_string(const std::string& s) {
  const auto k = parse_stream(s);
  if (!k) throw ConfigError("unknown stream '" + s + "' (expected median, gaussian or flat)");
  return *k;
}

/// Applies a JSON configuration document on top of `cfg`. Every key must be known.
inline void apply_config(const nlohmann::json& doc, RunConfig& cfg) {
  using detail::bind;
  auto& p = cfg.pipeline;
  auto& s = p.structures;
  auto& c = p.color;
  auto& e = cfg.evaluation;
  detail::apply_object(
      doc, "config",
      {
          {"stream", [&](const nlohmann::json& v) { p.stream = stream_from_string(v.get<std::string>()); }},
          {"seed", bind(p.seed)},
          {"workers", bind(cfg.workers)},
          {"border",
           [&](const nlohmann::json& v) {
             detail::apply_object(v, "border", {{"patch_samples", bind(p.border_patch_samples)}});
           }},
          {"color",
           [&](const nlohmann::json& v) {
             detail::apply_object(v, "color",
                                  {{"clusters", bind(c.clusters)},
                                   {"min_fraction", bind(c.min_fraction)},
                                   {"merge_distance", bind(c.merge_distance)},
                                   {"max_iterations", bind(c.kmeans.max_iterations)},
                                   {"tolerance", bind(c.kmeans.tolerance)}});
           }},
          {"structures",
           [&](const nlohmann::json& v) {
             detail::apply_object(v, "structures",
                                  {{"variance_window", bind(s.variance_window)},
                                   {"structureless_max_variance", bind(s.structureless_max_variance)},
                                   {"log_sigmas", bind(s.log_sigmas)},
                                   {"log_threshold", bind(s.log_threshold)},
                                   {"min_blobs", bind(s.min_blobs)},
                                   {"adaptive_window", bind(s.adaptive_window)},
                                   {"adaptive_offset", bind(s.adaptive_offset)},
                                   {"min_branch_points", bind(s.min_branch_points)},
                                   {"canny_low", bind(s.canny_low)},
                                   {"canny_high", bind(s.canny_high)},
                                   {"hough_rho", bind(s.hough_rho)},
                                   {"hough_theta_deg", bind(s.hough_theta_deg)},
                                   {"hough_threshold", bind(s.hough_threshold)},
                                   {"hough_min_length_fraction", bind(s.hough_min_length_fraction)},
                                   {"hough_max_gap", bind(s.hough_max_gap)},
                                   {"band_fraction", bind(s.band_fraction)},
                                   {"min_streak_segments", bind(s.min_streak_segments)}});
           }},
          {"evaluation",
           [&](const nlohmann::json& v) {
             detail::apply_object(v, "evaluation",
                                  {{"train_fraction", bind(e.train_fraction)},
                                   {"learning_rate", bind(e.training.learning_rate)},
                                   {"epochs", bind(e.training.epochs)}});
           }},
      });
}

inline void validate(const RunConfig& cfg) {
  const auto& p = cfg.pipeline;
  const auto& s = p.structures;
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  if (p.border_patch_samples < 1) throw ConfigError("border.patch_samples must be at least 1");
  if (p.color.clusters < 1) throw ConfigError("color.clusters must be at least 1");
  if (p.color.min_fraction < 0.0 || p.color.min_fraction > 1.0) throw ConfigError("color.min_fraction must lie in [0, 1]");
  if (p.color.kmeans.max_iterations < 1) throw ConfigError("color.max_iterations must be at least 1");
  if (s.variance_window < 1 || s.variance_window % 2 == 0) throw ConfigError("structures.variance_window must be odd");
  if (s.adaptive_window < 1 || s.adaptive_window % 2 == 0) throw ConfigError("structures.adaptive_window must be odd");
  if (s.log_sigmas.empty()) throw ConfigError("structures.log_sigmas must not be empty");
  for (double sigma : s.log_sigmas)
    if (!(sigma > 0.0)) throw ConfigError("structures.log_sigmas must be positive");
  if (!(s.hough_rho > 0.0) || !(s.hough_theta_deg > 0.0)) throw ConfigError("hough resolutions must be positive");
  if (s.canny_low > s.canny_high) throw ConfigError("structures.canny_low exceeds canny_high");
  const auto& e = cfg.evaluation;
  if (!(e.train_fraction > 0.0 && e.train_fraction < 1.0)) throw ConfigError("evaluation.train_fraction must lie in (0, 1)");
  if (!(e.training.learning_rate > 0.0)) throw ConfigError("evaluation.learning_rate must be positive");
  if (e.training.epochs < 1) throw ConfigError("evaluation.epochs must be at least 1");
}

inline void load_config_file(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  apply_config(doc, cfg);
}

/// The effective configuration as a document accepted by apply_config.
inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  const auto& p = cfg.pipeline;
  const auto& s = p.structures;
  const auto& c = p.color;
  const auto& e = cfg.evaluation;
  return {
      {"stream", std::string(stream_name(p.stream))},
      {"seed", p.seed},
      {"workers", cfg.workers},
      {"border", {{"patch_samples", p.border_patch_samples}}},
      {"color",
       {{"clusters", c.clusters},
        {"min_fraction", c.min_fraction},
        {"merge_distance", c.merge_distance},
        {"max_iterations", c.kmeans.max_iterations},
        {"tolerance", c.kmeans.tolerance}}},
      {"structures",
       {{"variance_window", s.variance_window},
        {"structureless_max_variance", s.structureless_max_variance},
        {"log_sigmas", s.log_sigmas},
        {"log_threshold", s.log_threshold},
        {"min_blobs", s.min_blobs},
        {"adaptive_window", s.adaptive_window},
        {"adaptive_offset", s.adaptive_offset},
        {"min_branch_points", s.min_branch_points},
        {"canny_low", s.canny_low},
        {"canny_high", s.canny_high},
        {"hough_rho", s.hough_rho},
        {"hough_theta_deg", s.hough_theta_deg},
        {"hough_threshold", s.hough_threshold},
        {"hough_min_length_fraction", s.hough_min_length_fraction},
        {"hough_max_gap", s.hough_max_gap},
        {"band_fraction", s.band_fraction},
        {"min_streak_segments", s.min_streak_segments}}},
      {"evaluation",
       {{"train_fraction", e.train_fraction},
        {"learning_rate", e.training.learning_rate},
        {"epochs", e.training.epochs}}},
  };
}

}  // namespace dermabcd::app
