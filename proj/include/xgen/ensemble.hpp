#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/corpus.hpp"
#include "xgen/detector.hpp"
#include "xgen/evaluation.hpp"

namespace xgen {

struct MemberPrediction {
  Label label = Label::kHuman;
  double proba = 0.5;
};

// Strict majority of member labels. An exact tie falls back to the
// probability-average rule over the same members.
Label vote(std::span<const MemberPrediction> members, double threshold = 0.5);

struct ProbAverage {
  double mean = 0.0;
  Label label = Label::kHuman;
};

ProbAverage prob_avg(std::span<const double> probas, double threshold = 0.5);

enum class EnsembleRule { kVote, kProbAvg };

// Anything that labels a sample end to end: one detector or an ensemble.
using Predictor = std::function<Label(const TextSample&)>;

Predictor single_predictor(const DetectorModel& model, double threshold = 0.5);
// Members are referenced, not copied; they must outlive the predictor.
Predictor ensemble_predictor(std::vector<const DetectorModel*> members, EnsembleRule rule,
                             double threshold = 0.5);

// A multi-generator training mixture. Every included generator contributes
// the same machine quota; human samples match the machine total.
struct MixSpec {
  std::vector<std::string> included_generators;
  std::size_t per_generator_machine_quota = 0;
  std::string human_source = "human";
  std::uint64_t seed = 0;
  int epochs_override = 3;

  std::size_t total_machine() const {
    return per_generator_machine_quota * included_generators.size();
  }
  void validate() const;
  bool operator==(const MixSpec&) const = default;
};

// floor(per-generator machine train size / |included|): the mix then holds
// roughly one generator's worth of machine data.
std::size_t default_quota(std::size_t per_generator_train, std::size_t n_included);

// Machine samples come from each generator's training partition; human
// samples from the shared human training pool (deduplicated by id).
std::vector<TextSample> build_mix(
    const std::map<std::string, std::vector<TextSample>>& machine_train,
    std::span<const TextSample> human_pool, const MixSpec& spec);

enum class QuotaMode {
  kFixedQuota,     // total machine count shrinks
  kPreserveTotal,  // quota rescaled to keep the original total (floored)
};

MixSpec prune(const MixSpec& spec, std::span<const std::string> remove,
              QuotaMode mode = QuotaMode::kFixedQuota);

struct SuiteReport {
  std::vector<std::pair<std::string, double>> per_generator_acc;
  double average = 0.0;
  double worst_case = 0.0;
  std::string worst_generator;
};

// Average and worst case from per-generator accuracies (first minimum wins).
SuiteReport make_suite_report(std::vector<std::pair<std::string, double>> per_generator_acc);

SuiteReport evaluate_suite(const Predictor& predictor, const TestSets& testsets,
                           std::span<const std::string> order = {});

nlohmann::json to_json(const MixSpec& spec);
MixSpec mix_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SuiteReport& report);
SuiteReport suite_report_from_json(const nlohmann::json& j);
// Suite layout: Average, Worst-case, then one row per generator.
std::string suite_csv(const SuiteReport& report);

}  // namespace xgen
