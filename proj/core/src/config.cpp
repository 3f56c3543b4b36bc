#include "s2fgl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "s2fgl/errors.hpp"
#include "s2fgl/format.hpp"

namespace s2fgl {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as a number");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as an integer");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as a seed");
  }
}

template <class T, class F>
std::string join(const std::vector<T>& values, F format) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format(values[i]);
  }
  return out;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::kFedAvg: return "fedavg";
    case Method::kFedProx: return "fedprox";
    case Method::kS2fgl: return "s2fgl";
    case Method::kNlirOnly: return "nlir-only";
    case Method::kFgmaOnly: return "fgma-only";
  }
  return "?";
}

std::string to_string(Backbone b) { return b == Backbone::kGcn ? "gcn" : "acm"; }

void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "experiment") {
    cfg.experiment = value;
  } else if (key == "dataset") {
    cfg.dataset = value;
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "num_clients") {
    cfg.run.num_clients = parse_int(key, value);
  } else if (key == "backbone") {
    if (value == "gcn") {
      cfg.run.backbone = Backbone::kGcn;
    } else if (value == "acm") {
      cfg.run.backbone = Backbone::kAcm;
    } else {
      throw ConfigError("config key 'backbone': expected gcn|acm, got '" + value + "'");
    }
  } else if (key == "method") {
    if (value == "fedavg") {
      cfg.run.method = Method::kFedAvg;
    } else if (value == "fedprox") {
      cfg.run.method = Method::kFedProx;
    } else if (value == "s2fgl") {
      cfg.run.method = Method::kS2fgl;
    } else if (value == "nlir-only") {
      cfg.run.method = Method::kNlirOnly;
    } else if (value == "fgma-only") {
      cfg.run.method = Method::kFgmaOnly;
    } else {
      throw ConfigError(
          "config key 'method': expected fedavg|fedprox|s2fgl|nlir-only|fgma-only, got '" +
          value + "'");
    }
  } else if (key == "lambda1") {
    cfg.run.lambda1 = parse_double(key, value);
  } else if (key == "lambda2") {
    cfg.run.lambda2 = parse_double(key, value);
  } else if (key == "mu") {
    cfg.run.prox_mu = parse_double(key, value);
  } else if (key == "damping_alpha") {
    cfg.run.damping_alpha = parse_double(key, value);
  } else if (key == "k_fraction") {
    cfg.run.k_fraction = parse_double(key, value);
  } else if (key == "k_sim") {
    cfg.run.k_sim = parse_int(key, value);
  } else if (key == "k_eig") {
    cfg.run.k_eig = parse_int(key, value);
  } else if (key == "proto_fraction") {
    cfg.run.proto_fraction = parse_double(key, value);
  } else if (key == "anchors_per_class") {
    cfg.run.anchors_per_class = parse_int(key, value);
  } else if (key == "rounds") {
    cfg.run.rounds = parse_int(key, value);
  } else if (key == "local_epochs") {
    cfg.run.local_epochs = parse_int(key, value);
  } else if (key == "lr") {
    cfg.run.lr = parse_double(key, value);
  } else if (key == "weight_decay") {
    cfg.run.weight_decay = parse_double(key, value);
  } else if (key == "hidden") {
    cfg.run.hidden = parse_int(key, value);
  } else if (key == "fkd_temperature") {
    cfg.run.fkd_temperature = parse_double(key, value);
  } else if (key == "parallel_clients") {
    if (value == "true" || value == "1") {
      cfg.run.parallel_clients = true;
    } else if (value == "false" || value == "0") {
      cfg.run.parallel_clients = false;
    } else {
      throw ConfigError("config key 'parallel_clients': expected true|false");
    }
  } else if (key == "split_ratios") {
    const auto parts = split_commas(value);
    if (parts.size() != 3) throw ConfigError("config key 'split_ratios': expected three values");
    for (int i = 0; i < 3; ++i) {
      cfg.run.split_ratios[static_cast<std::size_t>(i)] =
          parse_double(key, parts[static_cast<std::size_t>(i)]);
    }
  } else if (key == "seeds") {
    cfg.seeds.clear();
    for (const auto& part : split_commas(value)) cfg.seeds.push_back(parse_u64(key, part));
  } else if (key == "sbm_p_in") {
    cfg.sbm_p_in = parse_double(key, value);
  } else if (key == "sbm_p_out") {
    cfg.sbm_p_out = parse_double(key, value);
  } else if (key == "sbm_feature_dim") {
    cfg.sbm_feature_dim = parse_int(key, value);
  } else if (key == "histogram_bins") {
    cfg.histogram_bins = parse_int(key, value);
  } else if (key == "client_counts") {
    cfg.client_counts.clear();
    for (const auto& part : split_commas(value)) cfg.client_counts.push_back(parse_int(key, part));
  } else if (key == "nlir_scales") {
    cfg.nlir_scales.clear();
    for (const auto& part : split_commas(value)) cfg.nlir_scales.push_back(parse_double(key, part));
  } else if (key == "fgma_scales") {
    cfg.fgma_scales.clear();
    for (const auto& part : split_commas(value)) cfg.fgma_scales.push_back(parse_double(key, part));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config(const std::optional<std::string>& file_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides,
                              ExperimentConfig base) {
  ExperimentConfig cfg = std::move(base);
  if (file_path) {
    std::ifstream in(*file_path);
    if (!in) throw ConfigError("cannot open config file: " + *file_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = trim(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(*file_path + ":" + std::to_string(line_no) +
                          ": expected 'key = value'");
      }
      apply_config_entry(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
  }
  for (const auto& [key, value] : overrides) apply_config_entry(cfg, key, value);
  if (cfg.output_dir.empty()) cfg.output_dir = "runs/" + cfg.experiment;
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  const RunConfig& r = cfg.run;
  if (r.num_clients < 1) throw ConfigError("num_clients must be >= 1");
  if (r.lambda1 < 0.0 || !std::isfinite(r.lambda1)) throw ConfigError("lambda1 must be finite and >= 0");
  if (r.lambda2 < 0.0 || !std::isfinite(r.lambda2)) throw ConfigError("lambda2 must be finite and >= 0");
  if (r.prox_mu < 0.0) throw ConfigError("mu must be >= 0");
  if (!(r.damping_alpha > 0.0 && r.damping_alpha <= 1.0)) {
    throw ConfigError("damping_alpha must be in (0,1]");
  }
  if (!(r.k_fraction > 0.0 && r.k_fraction <= 1.0)) throw ConfigError("k_fraction must be in (0,1]");
  if (r.k_sim < 1) throw ConfigError("k_sim must be >= 1");
  if (r.k_eig < 1) throw ConfigError("k_eig must be >= 1");
  if (!(r.proto_fraction > 0.0 && r.proto_fraction <= 1.0)) {
    throw ConfigError("proto_fraction must be in (0,1]");
  }
  if (r.anchors_per_class < 1) throw ConfigError("anchors_per_class must be >= 1");
  if (r.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (r.local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (!(r.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (r.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (r.hidden < 1) throw ConfigError("hidden must be >= 1");
  if (!(r.fkd_temperature > 0.0)) throw ConfigError("fkd_temperature must be > 0");
  const double ratio_sum = r.split_ratios[0] + r.split_ratios[1] + r.split_ratios[2];
  if (std::abs(ratio_sum - 1.0) > 1e-9) throw ConfigError("split_ratios must sum to 1");
  for (double x : r.split_ratios) {
    if (x < 0.0) throw ConfigError("split_ratios entries must be >= 0");
  }
  if (cfg.seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (cfg.sbm_p_in < 0.0 || cfg.sbm_p_in > 1.0) throw ConfigError("sbm_p_in must be in [0,1]");
  if (cfg.sbm_p_out < 0.0 || cfg.sbm_p_out > 1.0) throw ConfigError("sbm_p_out must be in [0,1]");
  if (cfg.sbm_feature_dim < 1) throw ConfigError("sbm_feature_dim must be >= 1");
  if (cfg.histogram_bins < 2) throw ConfigError("histogram_bins must be >= 2");
  if (cfg.client_counts.empty()) throw ConfigError("client_counts must be nonempty");
  for (int c : cfg.client_counts) {
    if (c < 1) throw ConfigError("client_counts entries must be >= 1");
  }
  if (cfg.dataset.empty()) throw ConfigError("dataset must be set");
  if (cfg.experiment.empty()) throw ConfigError("experiment must be set");
}

std::string resolved_config_text(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["experiment"] = cfg.experiment;
  kv["dataset"] = cfg.dataset;
  kv["output_dir"] = cfg.output_dir;
  kv["num_clients"] = std::to_string(cfg.run.num_clients);
  kv["backbone"] = to_string(cfg.run.backbone);
  kv["method"] = to_string(cfg.run.method);
  kv["lambda1"] = format_double(cfg.run.lambda1);
  kv["lambda2"] = format_double(cfg.run.lambda2);
  kv["mu"] = format_double(cfg.run.prox_mu);
  kv["damping_alpha"] = format_double(cfg.run.damping_alpha);
  kv["k_fraction"] = format_double(cfg.run.k_fraction);
  kv["k_sim"] = std::to_string(cfg.run.k_sim);
  kv["k_eig"] = std::to_string(cfg.run.k_eig);
  kv["proto_fraction"] = format_double(cfg.run.proto_fraction);
  kv["anchors_per_class"] = std::to_string(cfg.run.anchors_per_class);
  kv["rounds"] = std::to_string(cfg.run.rounds);
  kv["local_epochs"] = std::to_string(cfg.run.local_epochs);
  kv["lr"] = format_double(cfg.run.lr);
  kv["weight_decay"] = format_double(cfg.run.weight_decay);
  kv["hidden"] = std::to_string(cfg.run.hidden);
  kv["fkd_temperature"] = format_double(cfg.run.fkd_temperature);
  kv["parallel_clients"] = cfg.run.parallel_clients ? "true" : "false";
  kv["split_ratios"] = join(std::vector<double>(cfg.run.split_ratios.begin(),
                                                cfg.run.split_ratios.end()),
                            [](double v) { return format_double(v); });
  kv["seeds"] = join(cfg.seeds, [](std::uint64_t s) { return std::to_string(s); });
  kv["sbm_p_in"] = format_double(cfg.sbm_p_in);
  kv["sbm_p_out"] = format_double(cfg.sbm_p_out);
  kv["sbm_feature_dim"] = std::to_string(cfg.sbm_feature_dim);
  kv["histogram_bins"] = std::to_string(cfg.histogram_bins);
  kv["client_counts"] = join(cfg.client_counts, [](int c) { return std::to_string(c); });
  kv["nlir_scales"] = join(cfg.nlir_scales, [](double v) { return format_double(v); });
  kv["fgma_scales"] = join(cfg.fgma_scales, [](double v) { return format_double(v); });

  std::string out;
  for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
  return out;
}

}  // namespace s2fgl
