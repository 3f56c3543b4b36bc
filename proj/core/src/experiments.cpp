#include "s2fgl/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "s2fgl/errors.hpp"
#include "s2fgl/format.hpp"
#include "s2fgl/louvain.hpp"
#include "s2fgl/ppr.hpp"
#include "s2fgl/rng.hpp"
#include "s2fgl/spectral.hpp"

namespace s2fgl {

namespace {

// Writes to <path>.partial and renames on success, so an interrupted run
// leaves a clearly marked partial artifact instead of a plausible one.
class AtomicFile {
 public:
  explicit AtomicFile(const std::filesystem::path& path)
      : final_path_(path), partial_path_(path.string() + ".partial"), out_(partial_path_) {
    if (!out_) throw std::runtime_error("cannot open " + partial_path_.string() + " for writing");
  }

  std::ofstream& stream() { return out_; }

  void commit() {
    out_.close();
    std::filesystem::rename(partial_path_, final_path_);
  }

 private:
  std::filesystem::path final_path_;
  std::filesystem::path partial_path_;
  std::ofstream out_;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<int> near_equal_blocks(int n, int c) {
  std::vector<int> blocks(static_cast<std::size_t>(c), n / c);
  for (int i = 0; i < n % c; ++i) blocks[static_cast<std::size_t>(i)] += 1;
  return blocks;
}

void write_resolved_config(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  AtomicFile file(dir / "config.resolved.txt");
  file.stream() << resolved_config_text(cfg);
  file.commit();
}

void write_rounds_jsonl(const TrainingResult& result, const std::filesystem::path& dir) {
  AtomicFile file(dir / "rounds.jsonl");
  auto& out = file.stream();
  for (const SeedRun& run : result.seed_runs) {
    for (const RoundReport& r : run.rounds) {
      out << "{\"seed\":" << run.seed << ",\"round\":" << r.round
          << ",\"accuracy\":" << format_double(r.accuracy)
          << ",\"sis\":" << format_double(r.sis_value) << ",\"client_losses\":[";
      for (std::size_t i = 0; i < r.client_losses.size(); ++i) {
        const ClientLossReport& c = r.client_losses[i];
        if (i) out << ",";
        out << "{\"client\":" << c.client_id << ",\"ce\":" << format_double(c.ce)
            << ",\"fkd\":" << format_double(c.fkd) << ",\"fgma\":" << format_double(c.fgma)
            << "}";
      }
      // wall_ms is the one timing field; consumers strip it when diffing.
      out << "],\"wall_ms\":" << format_double(r.wall_ms) << "}\n";
    }
  }
  file.commit();
}

TrainingResult train_with_dataset(const ExperimentConfig& cfg, const RunConfig& run) {
  return run_training([&cfg](std::uint64_t seed) { return load_dataset(cfg, seed); }, run,
                      cfg.seeds);
}

}  // namespace

Graph load_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::uint64_t sbm_seed = derive_seed(seed, seed_stream::kSbm);
  if (cfg.dataset == "sbm-cora") {
    return sbm_generate(near_equal_blocks(2708, 7), 0.01, 0.0005, 64, sbm_seed);
  }
  if (cfg.dataset == "sbm-cora-500") {
    return sbm_generate(near_equal_blocks(500, 7), 0.05, 0.002, 32, sbm_seed);
  }
  if (cfg.dataset.rfind("sbm:", 0) == 0) {
    const std::string spec = cfg.dataset.substr(4);
    const auto x = spec.find('x');
    if (x == std::string::npos) {
      throw ConfigError("dataset '" + cfg.dataset + "': expected sbm:<nodes>x<classes>");
    }
    int n = 0, c = 0;
    try {
      n = std::stoi(spec.substr(0, x));
      c = std::stoi(spec.substr(x + 1));
    } catch (const std::exception&) {
      throw ConfigError("dataset '" + cfg.dataset + "': expected sbm:<nodes>x<classes>");
    }
    if (n < 1 || c < 1 || c > n) {
      throw ConfigError("dataset '" + cfg.dataset + "': invalid node/class counts");
    }
    return sbm_generate(near_equal_blocks(n, c), cfg.sbm_p_in, cfg.sbm_p_out,
                        cfg.sbm_feature_dim, sbm_seed);
  }
  return load_graph(cfg.dataset);
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
  std::filesystem::path root = ".";
  if (const char* env = std::getenv("S2FGL_OUTPUT_ROOT"); env && *env) root = env;
  const std::filesystem::path dir = root / cfg.output_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::filesystem::path dir = resolve_output_dir(cfg);
  write_resolved_config(cfg, dir);

  const TrainingResult result = train_with_dataset(cfg, cfg.run);
  write_rounds_jsonl(result, dir);

  AtomicFile metrics(dir / "metrics.csv");
  auto& out = metrics.stream();
  const std::string stamp = utc_timestamp();
  out << "# schema=s2fgl.metrics.v1\n";
  out << "experiment,method,dataset,num_clients,rounds,seed,final_accuracy,final_mean,final_std,"
         "timestamp\n";
  for (const SeedRun& run : result.seed_runs) {
    out << cfg.experiment << "," << to_string(cfg.run.method) << "," << cfg.dataset << ","
        << cfg.run.num_clients << "," << cfg.run.rounds << "," << run.seed << ","
        << format_double(run.final_accuracy) << "," << format_double(result.final_mean) << ","
        << format_double(result.final_std) << "," << stamp << "\n";
  }
  metrics.commit();
  return dir;
}

std::filesystem::path emit_sis_curve(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::filesystem::path dir = resolve_output_dir(cfg);
  write_resolved_config(cfg, dir);

  AtomicFile file(dir / "sis_curve.csv");
  auto& out = file.stream();
  out << "# schema=s2fgl.sis-curve.v1\n";
  out << "clients,sis_sum,sis_per_node\n";
  for (int count : cfg.client_counts) {
    double sum = 0.0;
    double per_node = 0.0;
    for (std::uint64_t seed : cfg.seeds) {
      const Graph g = load_dataset(cfg, seed);
      const SplitMasks masks =
          stratified_split(g, cfg.run.split_ratios, derive_seed(seed, seed_stream::kSplit));
      const PartitionPlan plan =
          louvain_partition(g, count, derive_seed(seed, seed_stream::kLouvain));
      const double s = sis_partitioned(g, plan, masks, cfg.run.damping_alpha);
      sum += s;
      per_node += s / static_cast<double>(g.num_nodes());
    }
    sum /= static_cast<double>(cfg.seeds.size());
    per_node /= static_cast<double>(cfg.seeds.size());
    out << count << "," << format_double(sum) << "," << format_double(per_node) << "\n";
  }
  file.commit();
  return dir;
}

std::filesystem::path emit_spectral_heatmap(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.run.num_clients < 2) {
    throw ConfigError("spectral-heatmap needs num_clients >= 2");
  }
  const std::filesystem::path dir = resolve_output_dir(cfg);
  write_resolved_config(cfg, dir);

  const std::uint64_t seed = cfg.seeds.front();
  const Graph g = load_dataset(cfg, seed);
  const PartitionPlan plan =
      louvain_partition(g, cfg.run.num_clients, derive_seed(seed, seed_stream::kLouvain));

  std::vector<std::vector<double>> histograms;
  for (const auto& nodes : plan.client_nodes()) {
    const InducedSubgraph sub = induced_subgraph(g, nodes);
    histograms.push_back(
        eigenvalue_histogram(sym_normalized_laplacian(sub.graph), cfg.histogram_bins));
  }

  AtomicFile hist_file(dir / "eigenvalue_histograms.csv");
  auto& hout = hist_file.stream();
  hout << "# schema=s2fgl.eigenvalue-histograms.v1\n";
  hout << "client";
  for (int b = 0; b < cfg.histogram_bins; ++b) hout << ",bin_" << b;
  hout << "\n";
  for (std::size_t c = 0; c < histograms.size(); ++c) {
    hout << c;
    for (double v : histograms[c]) hout << "," << format_double(v);
    hout << "\n";
  }
  hist_file.commit();

  const DenseMatrix heatmap = spectral_kl_heatmap(histograms);
  AtomicFile kl_file(dir / "spectral_kl.csv");
  auto& kout = kl_file.stream();
  kout << "# schema=s2fgl.spectral-kl.v1\n";
  kout << "client";
  for (int j = 0; j < heatmap.cols(); ++j) kout << ",kl_" << j;
  kout << "\n";
  for (int i = 0; i < heatmap.rows(); ++i) {
    kout << i;
    for (int j = 0; j < heatmap.cols(); ++j) kout << "," << format_double(heatmap(i, j));
    kout << "\n";
  }
  kl_file.commit();
  return dir;
}

std::filesystem::path run_ablation(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::filesystem::path dir = resolve_output_dir(cfg);
  write_resolved_config(cfg, dir);

  struct Variant {
    const char* name;
    Method method;
  };
  const Variant variants[] = {{"neither", Method::kFedAvg},
                              {"nlir-only", Method::kNlirOnly},
                              {"fgma-only", Method::kFgmaOnly},
                              {"both", Method::kS2fgl}};

  AtomicFile file(dir / "ablation.csv");
  auto& out = file.stream();
  out << "# schema=s2fgl.ablation.v1\n";
  out << "variant,lambda1,lambda2,final_mean,final_std\n";
  for (const Variant& v : variants) {
    RunConfig run = cfg.run;
    run.method = v.method;
    const double l1 = (v.method == Method::kNlirOnly || v.method == Method::kS2fgl)
                          ? cfg.run.lambda1
                          : 0.0;
    const double l2 = (v.method == Method::kFgmaOnly || v.method == Method::kS2fgl)
                          ? cfg.run.lambda2
                          : 0.0;
    const TrainingResult result = train_with_dataset(cfg, run);
    out << v.name << "," << format_double(l1) << "," << format_double(l2) << ","
        << format_double(result.final_mean) << "," << format_double(result.final_std) << "\n";
  }
  file.commit();
  return dir;
}

std::filesystem::path run_sensitivity(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::filesystem::path dir = resolve_output_dir(cfg);
  write_resolved_config(cfg, dir);

  RunConfig baseline_run = cfg.run;
  baseline_run.method = Method::kFedAvg;
  const TrainingResult baseline = train_with_dataset(cfg, baseline_run);

  AtomicFile file(dir / "sensitivity.csv");
  auto& out = file.stream();
  out << "# schema=s2fgl.sensitivity.v1\n";
  out << "factor,scale,final_mean,baseline_mean,delta\n";
  auto emit = [&](const char* factor, double scale, const TrainingResult& result) {
    out << factor << "," << format_double(scale) << "," << format_double(result.final_mean)
        << "," << format_double(baseline.final_mean) << ","
        << format_double(result.final_mean - baseline.final_mean) << "\n";
  };
  for (double scale : cfg.nlir_scales) {
    RunConfig run = cfg.run;
    run.method = Method::kS2fgl;
    run.lambda1 = scale;
    emit("nlir", scale, train_with_dataset(cfg, run));
  }
  for (double scale : cfg.fgma_scales) {
    RunConfig run = cfg.run;
    run.method = Method::kS2fgl;
    run.lambda2 = scale;
    emit("fgma", scale, train_with_dataset(cfg, run));
  }
  file.commit();
  return dir;
}

}  // namespace s2fgl
