#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "s2fgl/config.hpp"
#include "s2fgl/errors.hpp"

using s2fgl::ConfigError;
using s2fgl::ExperimentConfig;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("defaults validate") {
  const ExperimentConfig cfg = s2fgl::parse_config(std::nullopt, {});
  CHECK_NOTHROW(s2fgl::validate_config(cfg));
  CHECK(cfg.run.damping_alpha == 0.85);
  CHECK(cfg.run.anchors_per_class == 4);
  CHECK(cfg.run.k_fraction == doctest::Approx(1.0 / 3.0));
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
  CHECK(cfg.output_dir == "runs/run");
}

TEST_CASE("file parsing with comments and overrides") {
  const auto path = write_temp("s2fgl_cfg.txt",
                               "# experiment file\n"
                               "dataset = sbm:100x4\n"
                               "num_clients = 5\n"
                               "lambda1 = 2.5\n"
                               "seeds = 7, 8, 9\n"
                               "\n"
                               "method = fedprox\n");
  const ExperimentConfig cfg =
      s2fgl::parse_config(path, {{"num_clients", "6"}, {"backbone", "acm"}});
  CHECK(cfg.dataset == "sbm:100x4");
  CHECK(cfg.run.num_clients == 6);  // override wins over the file
  CHECK(cfg.run.lambda1 == 2.5);
  CHECK(cfg.run.method == s2fgl::Method::kFedProx);
  CHECK(cfg.run.backbone == s2fgl::Backbone::kAcm);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8, 9});
}

TEST_CASE("unknown keys and malformed values are rejected by name") {
  CHECK_THROWS_WITH_AS(s2fgl::parse_config(std::nullopt, {{"lamda1", "1"}}),
                       doctest::Contains("lamda1"), ConfigError);
  CHECK_THROWS_WITH_AS(s2fgl::parse_config(std::nullopt, {{"lambda1", "abc"}}),
                       doctest::Contains("lambda1"), ConfigError);
  CHECK_THROWS_AS(s2fgl::parse_config(std::nullopt, {{"method", "magic"}}), ConfigError);
  CHECK_THROWS_AS(s2fgl::parse_config(std::nullopt, {{"split_ratios", "0.5,0.5"}}), ConfigError);

  const auto bad = write_temp("s2fgl_bad_cfg.txt", "just a line without equals\n");
  CHECK_THROWS_AS(s2fgl::parse_config(bad, {}), ConfigError);
  CHECK_THROWS_AS(s2fgl::parse_config(std::string("/nonexistent.cfg"), {}), ConfigError);
}

TEST_CASE("range validation") {
  const auto expect_invalid = [](const std::string& key, const std::string& value) {
    ExperimentConfig cfg = s2fgl::parse_config(std::nullopt, {{key, value}});
    CHECK_THROWS_AS(s2fgl::validate_config(cfg), ConfigError);
  };
  expect_invalid("lambda1", "-1");
  expect_invalid("lambda2", "-0.5");
  expect_invalid("damping_alpha", "0");
  expect_invalid("damping_alpha", "1.2");
  expect_invalid("k_fraction", "0");
  expect_invalid("k_fraction", "1.5");
  expect_invalid("proto_fraction", "0");
  expect_invalid("rounds", "0");
  expect_invalid("local_epochs", "0");
  expect_invalid("lr", "0");
  expect_invalid("hidden", "0");
  expect_invalid("fkd_temperature", "0");
  expect_invalid("num_clients", "0");
  expect_invalid("histogram_bins", "1");
  expect_invalid("sbm_p_in", "1.5");
  expect_invalid("split_ratios", "0.5,0.3,0.3");

  // damping_alpha = 1 is the accepted limit.
  ExperimentConfig limit = s2fgl::parse_config(std::nullopt, {{"damping_alpha", "1"}});
  CHECK_NOTHROW(s2fgl::validate_config(limit));
}

TEST_CASE("resolved config text is canonical") {
  const ExperimentConfig cfg = s2fgl::parse_config(
      std::nullopt, {{"lambda1", "2.5"}, {"dataset", "sbm:50x2"}, {"seeds", "3,4"}});
  const std::string text = s2fgl::resolved_config_text(cfg);
  CHECK(text.find("lambda1 = 2.5\n") != std::string::npos);
  CHECK(text.find("dataset = sbm:50x2\n") != std::string::npos);
  CHECK(text.find("seeds = 3,4\n") != std::string::npos);
  CHECK(text.find("method = s2fgl\n") != std::string::npos);

  // Re-applying every line reproduces the same resolved text.
  ExperimentConfig replay;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::string line = text.substr(start, end - start);
    const std::size_t eq = line.find(" = ");
    s2fgl::apply_config_entry(replay, line.substr(0, eq), line.substr(eq + 3));
    start = end + 1;
  }
  CHECK(s2fgl::resolved_config_text(replay) == text);
}
