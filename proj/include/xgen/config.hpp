#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/detector.hpp"
#include "xgen/ensemble.hpp"
#include "xgen/fixtures.hpp"
#include "xgen/graph.hpp"

namespace xgen {

// Declarative pipeline configuration. Every random stream in the pipeline
// is derived from `seed`.
struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string domain = "synthetic";
  std::vector<std::string> generators;
  // Declared (medium, large) pairs: direction tables and graph highlighting.
  std::vector<Edge> pairs;
  // Corpus file per id ("human" plus generators). Unlisted ids default to
  // <out>/corpora/<id>.jsonl.
  std::map<std::string, std::filesystem::path> corpora;
  std::size_t prompt_tokens = 20;
  std::size_t max_tokens = 120;
  std::array<std::uint32_t, 3> ratios{8, 1, 1};
  FeaturizerConfig featurizer;
  TrainConfig train = TrainConfig::single_generator();
  TrainConfig mix_train = TrainConfig::mixed();
  std::size_t bootstrap_k = 100;
  double alpha = 0.05;
  std::vector<double> good_thresholds{0.01, 0.02, 0.04};
  double poor_threshold = 0.20;
  bool require_significance = false;
  std::optional<std::size_t> mix_quota;
  QuotaMode quota_mode = QuotaMode::kFixedQuota;
  std::vector<std::vector<std::string>> prune_sets;
  std::optional<ScenarioConfig> fixtures;
  std::filesystem::path out_dir = "out";

  void validate() const;
};

// Relative paths resolve against base_dir.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace xgen
