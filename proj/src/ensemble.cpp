#include "xgen/ensemble.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {

Label vote(std::span<const MemberPrediction> members, double threshold) {
  if (members.empty()) throw Error(ErrorCode::kEmptyEnsemble, "vote over zero members");
  const auto machine = static_cast<std::size_t>(std::count_if(
      members.begin(), members.end(), [](const auto& m) { return m.label == Label::kMachine; }));
  const std::size_t human = members.size() - machine;
  if (machine > human) return Label::kMachine;
  if (human > machine) return Label::kHuman;
  std::vector<double> probas;
  probas.reserve(members.size());
  for (const auto& m : members) probas.push_back(m.proba);
  return prob_avg(probas, threshold).label;
}

ProbAverage prob_avg(std::span<const double> probas, double threshold) {
  if (probas.empty()) throw Error(ErrorCode::kEmptyEnsemble, "average over zero members");
  // Summing in sorted order makes the mean independent of member order.
  std::vector<double> sorted(probas.begin(), probas.end());
  std::sort(sorted.begin(), sorted.end());
  ProbAverage r;
  r.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / double(sorted.size());
  r.mean = std::clamp(r.mean, 0.0, 1.0);
  r.label = label_for(r.mean, threshold);
  return r;
}

Predictor single_predictor(const DetectorModel& model, double threshold) {
  return [&model, threshold](const TextSample& s) { return predict(model, s.text, threshold); };
}

Predictor ensemble_predictor(std::vector<const DetectorModel*> members, EnsembleRule rule,
                             double threshold) {
  if (members.empty()) throw Error(ErrorCode::kEmptyEnsemble, "ensemble has no members");
  return [members = std::move(members), rule, threshold](const TextSample& s) {
    std::vector<MemberPrediction> preds;
    preds.reserve(members.size());
    const FeaturizerConfig* last_cfg = nullptr;
    SparseVector x;
    for (const DetectorModel* m : members) {
      if (!last_cfg || !(*last_cfg == m->featurizer)) {
        x = featurize(s.text, m->featurizer);
        last_cfg = &m->featurizer;
      }
      const double p = predict_proba(*m, x);
      preds.push_back({label_for(p, threshold), p});
    }
    if (rule == EnsembleRule::kVote) return vote(preds, threshold);
    std::vector<double> probas;
    probas.reserve(preds.size());
    for (const auto& p : preds) probas.push_back(p.proba);
    return prob_avg(probas, threshold).label;
  };
}

void MixSpec::validate() const {
  if (included_generators.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mix must include at least one generator");
  }
  std::set<std::string> seen(included_generators.begin(), included_generators.end());
  if (seen.size() != included_generators.size()) {
    throw Error(ErrorCode::kInvalidArgument, "mix lists a generator twice");
  }
  if (per_generator_machine_quota == 0) {
    throw Error(ErrorCode::kInvalidArgument, "mix quota must be positive");
  }
  if (epochs_override < 1) throw Error(ErrorCode::kInvalidArgument, "mix epochs must be >= 1");
}

std::size_t default_quota(std::size_t per_generator_train, std::size_t n_included) {
  if (n_included == 0) throw Error(ErrorCode::kInvalidArgument, "no generators in mix");
  return per_generator_train / n_included;
}

namespace {

// Seeded subsample of `need` items keeping the original relative order.
std::vector<std::size_t> subsample(std::size_t have, std::size_t need, std::uint64_t seed) {
  std::vector<std::size_t> idx(have);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(idx));
  idx.resize(need);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Error insufficient(const std::string& who, std::size_t have, std::size_t need) {
  return Error(ErrorCode::kInsufficientSamples, who + ": have " + std::to_string(have) +
                                                    " samples, need " + std::to_string(need));
}

}  // namespace

std::vector<TextSample> build_mix(
    const std::map<std::string, std::vector<TextSample>>& machine_train,
    std::span<const TextSample> human_pool, const MixSpec& spec) {
  spec.validate();
  const std::size_t quota = spec.per_generator_machine_quota;
  std::vector<TextSample> out;
  out.reserve(2 * spec.total_machine());

  for (const auto& gen : spec.included_generators) {
    auto it = machine_train.find(gen);
    if (it == machine_train.end()) {
      throw Error(ErrorCode::kUnknownGenerator, "no training data for \"" + gen + "\"");
    }
    std::vector<const TextSample*> pool;
    for (const auto& s : it->second) {
      if (s.label == Label::kMachine && s.generator_id == gen) pool.push_back(&s);
    }
    if (pool.size() < quota) throw insufficient(gen, pool.size(), quota);
    // Seeded per generator so pruning others never changes this draw.
    for (auto i : subsample(pool.size(), quota, derive_seed(spec.seed, "mix:" + gen))) {
      out.push_back(*pool[i]);
    }
  }

  std::vector<const TextSample*> humans;
  std::set<std::string_view> seen;
  for (const auto& s : human_pool) {
    if (s.label == Label::kHuman && seen.insert(s.id).second) humans.push_back(&s);
  }
  const std::size_t need = spec.total_machine();
  if (humans.size() < need) throw insufficient("human pool", humans.size(), need);
  for (auto i : subsample(humans.size(), need, derive_seed(spec.seed, "mix:human"))) {
    out.push_back(*humans[i]);
  }

  Rng rng(derive_seed(spec.seed, "mix:shuffle"));
  rng.shuffle(std::span(out));
  return out;
}

MixSpec prune(const MixSpec& spec, std::span<const std::string> remove, QuotaMode mode) {
  for (const auto& r : remove) {
    if (std::find(spec.included_generators.begin(), spec.included_generators.end(), r) ==
        spec.included_generators.end()) {
      throw Error(ErrorCode::kUnknownGenerator, "cannot prune \"" + r + "\": not in the mix");
    }
  }
  MixSpec out = spec;
  std::erase_if(out.included_generators, [&](const std::string& g) {
    return std::find(remove.begin(), remove.end(), g) != remove.end();
  });
  if (out.included_generators.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "pruning would remove every generator");
  }
  if (mode == QuotaMode::kPreserveTotal) {
    out.per_generator_machine_quota = spec.total_machine() / out.included_generators.size();
  }
  return out;
}

SuiteReport make_suite_report(std::vector<std::pair<std::string, double>> per_generator_acc) {
  if (per_generator_acc.empty()) {
    throw Error(ErrorCode::kEmptyTestSet, "suite report needs at least one generator");
  }
  SuiteReport r;
  r.per_generator_acc = std::move(per_generator_acc);
  double sum = 0.0;
  r.worst_case = r.per_generator_acc.front().second;
  r.worst_generator = r.per_generator_acc.front().first;
  for (const auto& [gen, acc] : r.per_generator_acc) {
    sum += acc;
    if (acc < r.worst_case) {
      r.worst_case = acc;
      r.worst_generator = gen;
    }
  }
  r.average = sum / double(r.per_generator_acc.size());
  return r;
}

SuiteReport evaluate_suite(const Predictor& predictor, const TestSets& testsets,
                           std::span<const std::string> order) {
  if (testsets.empty()) throw Error(ErrorCode::kEmptyTestSet, "no test sets");
  std::vector<std::string> gens;
  if (order.empty()) {
    for (const auto& [g, _] : testsets) gens.push_back(g);
  } else {
    gens.assign(order.begin(), order.end());
  }
  std::vector<std::pair<std::string, double>> accs;
  for (const auto& g : gens) {
    auto it = testsets.find(g);
    if (it == testsets.end()) {
      throw Error(ErrorCode::kUnknownGenerator, "no test set for \"" + g + "\"");
    }
    if (it->second.empty()) {
      throw Error(ErrorCode::kEmptyTestSet, "test set for \"" + g + "\" is empty");
    }
    std::size_t hits = 0;
    for (const auto& s : it->second) hits += predictor(s) == s.label;
    accs.emplace_back(g, double(hits) / double(it->second.size()));
  }
  return make_suite_report(std::move(accs));
}

nlohmann::json to_json(const MixSpec& spec) {
  return {{"included_generators", spec.included_generators},
          {"per_generator_machine_quota", spec.per_generator_machine_quota},
          {"total_machine", spec.total_machine()},
          {"human_source", spec.human_source},
          {"seed", spec.seed},
          {"epochs_override", spec.epochs_override}};
}

MixSpec mix_spec_from_json(const nlohmann::json& j) {
  MixSpec s;
  try {
    s.included_generators = j.at("included_generators").get<std::vector<std::string>>();
    s.per_generator_machine_quota = j.at("per_generator_machine_quota").get<std::size_t>();
    s.human_source = j.at("human_source").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.epochs_override = j.at("epochs_override").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad mix spec: ") + e.what());
  }
  if (j.contains("total_machine") && j["total_machine"].get<std::size_t>() != s.total_machine()) {
    throw Error(ErrorCode::kInvalidArgument, "mix spec total_machine != quota x |included|");
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const SuiteReport& report) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [g, a] : report.per_generator_acc) per.push_back({{"generator", g}, {"acc", a}});
  return {{"per_generator_acc", std::move(per)},
          {"average", report.average},
          {"worst_case", report.worst_case},
          {"worst_generator", report.worst_generator}};
}

SuiteReport suite_report_from_json(const nlohmann::json& j) {
  SuiteReport r;
  try {
    for (const auto& e : j.at("per_generator_acc")) {
      r.per_generator_acc.emplace_back(e.at("generator").get<std::string>(),
                                       e.at("acc").get<double>());
    }
    r.average = j.at("average").get<double>();
    r.worst_case = j.at("worst_case").get<double>();
    r.worst_generator = j.at("worst_generator").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad suite report: ") + e.what());
  }
  return r;
}

std::string suite_csv(const SuiteReport& report) {
  std::string out = "row,acc_percent\n";
  out += "Average," + format_fixed(report.average * 100.0, 1) + "\n";
  out += "Worst-case," + format_fixed(report.worst_case * 100.0, 1) + "\n";
  for (const auto& [g, a] : report.per_generator_acc) {
    out += csv_field(g) + "," + format_fixed(a * 100.0, 1) + "\n";
  }
  return out;
}

}  // namespace xgen
