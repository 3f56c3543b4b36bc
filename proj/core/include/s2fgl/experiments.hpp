#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "s2fgl/config.hpp"
#include "s2fgl/graph.hpp"

namespace s2fgl {

// Resolves the dataset field: a graph-file path, "sbm:<N>x<C>", or a named
// preset. Synthetic graphs are drawn from the seed's SBM stream.
Graph load_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

// Output directory for an experiment: $S2FGL_OUTPUT_ROOT (default ".") /
// output_dir. Created on demand; every artifact lands inside it.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

// Each runner validates the config, writes config.resolved.txt plus its
// artifacts into the output directory, and returns that directory.
std::filesystem::path run_experiment(const ExperimentConfig& cfg);       // metrics.csv, rounds.jsonl
std::filesystem::path emit_sis_curve(const ExperimentConfig& cfg);       // sis_curve.csv
std::filesystem::path emit_spectral_heatmap(const ExperimentConfig& cfg);// eigenvalue_histograms.csv, spectral_kl.csv
std::filesystem::path run_ablation(const ExperimentConfig& cfg);         // ablation.csv
std::filesystem::path run_sensitivity(const ExperimentConfig& cfg);      // sensitivity.csv

}  // namespace s2fgl
