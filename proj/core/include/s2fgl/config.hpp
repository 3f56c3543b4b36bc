#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "s2fgl/federation.hpp"

namespace s2fgl {

// Flat experiment configuration: every key can come from a `key = value`
// config file or a --key value override, with CLI > file > defaults.
struct ExperimentConfig {
  std::string experiment = "run";
  // Graph-file path, "sbm:<N>x<C>" spec, or a named preset
  // (sbm-cora, sbm-cora-500).
  std::string dataset = "sbm:200x4";
  std::string output_dir;  // default runs/<experiment>

  RunConfig run;
  std::vector<std::uint64_t> seeds{1};

  double sbm_p_in = 0.05;
  double sbm_p_out = 0.002;
  int sbm_feature_dim = 32;

  int histogram_bins = 20;
  std::vector<int> client_counts{1, 5, 10, 20};
  std::vector<double> nlir_scales{100.0, 50.0, 10.0, 1.0};
  std::vector<double> fgma_scales{0.01, 0.05, 0.5, 1.0};
};

std::string to_string(Method m);
std::string to_string(Backbone b);

// Applies one key/value pair; throws ConfigError naming unknown keys or
// malformed values.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Parses an optional config file into `base`, then applies overrides in
// order (CLI > file > defaults).
ExperimentConfig parse_config(const std::optional<std::string>& file_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides,
                              ExperimentConfig base = ExperimentConfig{});

// Range validation (lambdas >= 0, damping in (0,1], ...).
void validate_config(const ExperimentConfig& cfg);

// Canonical `key = value` snapshot, sorted by key.
std::string resolved_config_text(const ExperimentConfig& cfg);

}  // namespace s2fgl
