#include "xgen/config.hpp"

#include <set>

#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {

void PipelineConfig::validate() const {
  if (generators.empty()) throw Error(ErrorCode::kInvalidConfig, "config lists no generators");
  std::set<std::string> gens(generators.begin(), generators.end());
  if (gens.size() != generators.size()) {
    throw Error(ErrorCode::kInvalidConfig, "config lists a generator twice");
  }
  if (gens.contains("human")) {
    throw Error(ErrorCode::kInvalidConfig, "\"human\" is reserved for the human corpus");
  }
  auto known = [&](const std::string& g, const char* where) {
    if (!gens.contains(g)) {
      throw Error(ErrorCode::kUnknownGenerator,
                  std::string(where) + " names unknown generator \"" + g + "\"");
    }
  };
  for (const auto& [m, l] : pairs) {
    known(m, "pairs");
    known(l, "pairs");
  }
  for (const auto& set : prune_sets) {
    for (const auto& g : set) known(g, "mix.prune_sets");
  }
  if (ratios[0] + ratios[1] + ratios[2] == 0) {
    throw Error(ErrorCode::kInvalidConfig, "split ratios must not all be zero");
  }
  if (bootstrap_k < 2) throw Error(ErrorCode::kInvalidConfig, "bootstrap_k must be >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kInvalidConfig, "alpha must lie in (0, 1)");
  for (double t : good_thresholds) {
    if (!(t > 0.0)) throw Error(ErrorCode::kInvalidConfig, "graph thresholds must be > 0");
  }
  if (!(poor_threshold > 0.0)) throw Error(ErrorCode::kInvalidConfig, "poor_threshold must be > 0");
  featurizer.validate();
  train.validate();
  mix_train.validate();
}

PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    c.seed = j.value("seed", c.seed);
    c.domain = j.value("domain", c.domain);
    c.generators = j.at("generators").get<std::vector<std::string>>();
    for (const auto& p : j.value("pairs", nlohmann::json::array())) {
      c.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
    const nlohmann::json corpora = j.value("corpora", nlohmann::json::object());
    for (const auto& [id, path] : corpora.items()) {
      c.corpora[id] = resolve(path.get<std::string>());
    }
    if (j.contains("protocol")) {
      const auto& p = j["protocol"];
      c.prompt_tokens = p.value("prompt_tokens", c.prompt_tokens);
      c.max_tokens = p.value("max_tokens", c.max_tokens);
      c.ratios = p.value("ratios", c.ratios);
    }
    if (j.contains("featurizer")) c.featurizer = featurizer_from_json(j["featurizer"]);
    if (j.contains("train")) c.train = train_config_from_json(j["train"]);
    if (j.contains("mix_train")) {
      nlohmann::json mt = j["mix_train"];
      if (!mt.contains("epochs")) mt["epochs"] = TrainConfig::mixed().epochs;
      c.mix_train = train_config_from_json(mt);
    }
    if (j.contains("evaluation")) {
      c.bootstrap_k = j["evaluation"].value("bootstrap_k", c.bootstrap_k);
      c.alpha = j["evaluation"].value("alpha", c.alpha);
    }
    if (j.contains("graph")) {
      const auto& g = j["graph"];
      c.good_thresholds = g.value("good_thresholds", c.good_thresholds);
      c.poor_threshold = g.value("poor_threshold", c.poor_threshold);
      c.require_significance = g.value("require_significance", c.require_significance);
    }
    if (j.contains("mix")) {
      const auto& m = j["mix"];
      if (m.contains("quota") && !m["quota"].is_null()) c.mix_quota = m["quota"].get<std::size_t>();
      const std::string mode = m.value("quota_mode", std::string("fixed"));
      if (mode == "fixed") {
        c.quota_mode = QuotaMode::kFixedQuota;
      } else if (mode == "preserve_total") {
        c.quota_mode = QuotaMode::kPreserveTotal;
      } else {
        throw Error(ErrorCode::kInvalidConfig, "mix.quota_mode must be fixed or preserve_total");
      }
      c.prune_sets = m.value("prune_sets", c.prune_sets);
    }
    if (j.contains("fixtures")) c.fixtures = scenario_config_from_json(j["fixtures"]);
    if (j.contains("out")) c.out_dir = resolve(j["out"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kInvalidConfig, "config file not found: " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig, "config " + path.string() + " is not JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace xgen
