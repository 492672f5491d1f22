#include "xgen/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "xgen/config.hpp"
#include "xgen/corpus.hpp"
#include "xgen/detector.hpp"
#include "xgen/ensemble.hpp"
#include "xgen/error.hpp"
#include "xgen/evaluation.hpp"
#include "xgen/fixtures.hpp"
#include "xgen/graph.hpp"
#include "xgen/report.hpp"
#include "xgen/util.hpp"

namespace xgen {

namespace {

namespace fs = std::filesystem;

std::shared_ptr<spdlog::logger> log() {
  static auto logger = [] {
    auto l = spdlog::stderr_color_mt("xgen");
    const char* level = std::getenv("XGEN_LOG");
    l->set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
    return l;
  }();
  return logger;
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + " is not JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_file(path, j.dump(2) + "\n");
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(sep, pos);
    if (end == std::string::npos) end = text.size();
    if (end > pos) out.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

std::array<std::uint32_t, 3> parse_ratios(const std::string& text) {
  const auto parts = split_list(text, ':');
  if (parts.size() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "ratios must look like 8:1:1");
  }
  std::array<std::uint32_t, 3> r{};
  for (int i = 0; i < 3; ++i) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing characters");
      r[i] = static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad ratio \"" + parts[i] + "\"");
    }
  }
  return r;
}

std::string threshold_tag(double t) { return format_fixed(t * 100.0, 2) + "pct"; }

// File layout of one pipeline run under the output directory.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::ostream& out) : cfg_(std::move(cfg)), out_(out) {}

  void fixture_gen() {
    if (!cfg_.fixtures) throw Error(ErrorCode::kInvalidConfig, "config has no \"fixtures\" section");
    ScenarioConfig sc = *cfg_.fixtures;
    sc.seed = derive_seed(cfg_.seed, "fixtures");
    sc.domain = cfg_.domain;
    sc.prompt_tokens = cfg_.prompt_tokens;
    sc.max_tokens = cfg_.max_tokens;
    const Scenario scenario = build_scenario(sc);
    const std::set<std::string> have(scenario.generator_ids.begin(), scenario.generator_ids.end());
    const std::set<std::string> want(cfg_.generators.begin(), cfg_.generators.end());
    if (have != want) {
      throw Error(ErrorCode::kInvalidConfig, "fixture generators (" +
                                                 join(scenario.generator_ids, ", ") +
                                                 ") do not match config generators");
    }
    write_jsonl(dir() / "corpora" / "human.jsonl", scenario.human.samples);
    for (const auto& [gen, corpus] : scenario.machine) {
      write_jsonl(dir() / "corpora" / (gen + ".jsonl"), corpus.samples);
    }
    nlohmann::json fam = family_config_json(scenario);
    fam["scenario"] = to_json(sc);
    write_json(dir() / "fixtures" / "families.json", fam);
    out_ << "fixture-gen: " << scenario.human.samples.size() << " human samples, "
         << scenario.machine.size() << " generators\n";
  }

  void ingest(const fs::path& input, const std::string& domain, const std::string& name,
              bool copy) {
    const Corpus c = ingest_jsonl(input, domain);
    if (copy) write_jsonl(dir() / "corpora" / (name + ".jsonl"), c.samples);
    out_ << "ingest: " << c.samples.size() << " samples from " << input.string()
         << " (domain " << c.domain << ", sha256 " << c.source_digest << ")\n";
  }

  void split(std::optional<std::array<std::uint32_t, 3>> ratios) {
    const SplitSpec spec{ratios.value_or(cfg_.ratios), derive_seed(cfg_.seed, "split")};
    auto load = [&](const std::string& id) {
      Corpus c = ingest_jsonl(corpus_path(id), cfg_.domain);
      for (auto& s : c.samples) s = truncate_length(std::move(s), cfg_.max_tokens);
      return c;
    };
    const Corpus human = load("human");
    const CorpusSplit human_split = split_corpus(human, spec);
    const SplitManifest manifest = make_manifest(human_split, spec);
    write_jsonl(dir() / "split" / "human_train.jsonl", human_split.train.samples);

    for (const auto& gen : cfg_.generators) {
      const Corpus machine = load(gen);
      const bool linked = std::all_of(machine.samples.begin(), machine.samples.end(), [&](const auto& s) {
        return s.meta.contains("source_id") && manifest.assignments.contains(source_id(s));
      });
      // Continuations follow their prompt's partition, so no prompt leaks
      // across partitions; unlinked corpora are split on their own.
      CorpusSplit machine_split;
      if (linked) {
        machine_split = apply_manifest(machine, manifest);
      } else {
        const SplitSpec own{spec.ratios, derive_seed(spec.seed, gen)};
        machine_split = split_corpus(machine, own);
        write_json(dir() / "split" / (gen + ".manifest.json"), to_json(make_manifest(machine_split, own)));
      }
      const PairedDataset ds =
          pair_splits(human_split, machine_split, gen, derive_seed(cfg_.seed, "pair:" + gen));
      write_jsonl(paired(gen, "train"), ds.train);
      write_jsonl(paired(gen, "dev"), ds.dev);
      write_jsonl(paired(gen, "test"), ds.test);
      out_ << "split: " << gen << " paired " << ds.train.size() << "/" << ds.dev.size() << "/"
           << ds.test.size() << "\n";
    }
    write_json(dir() / "split" / "manifest.json", to_json(manifest));
    out_ << "split: human " << human_split.train.samples.size() << "/"
         << human_split.dev.samples.size() << "/" << human_split.test.samples.size() << "\n";
  }

  void train(std::vector<std::string> gens) {
    if (gens.empty()) gens = cfg_.generators;
    for (const auto& gen : gens) {
      if (std::find(cfg_.generators.begin(), cfg_.generators.end(), gen) == cfg_.generators.end()) {
        throw Error(ErrorCode::kUnknownGenerator, "unknown generator \"" + gen + "\"");
      }
      TrainConfig tc = cfg_.train;
      tc.seed = derive_seed(cfg_.seed, "train:" + gen);
      const auto data = read_samples(paired(gen, "train"));
      const DetectorModel model = train_detector(data, tc);
      save_model(model, model_path(gen));
      const auto dev = read_samples(paired(gen, "dev"));
      if (!dev.empty()) log()->info("{}: dev accuracy {:.4f}", gen, accuracy(model, dev));
      out_ << "train: " << gen << " on " << data.size() << " samples\n";
    }
  }

  void matrix() {
    const AccGapMatrix m = gap_matrix_with_significance(
        load_models(), load_tests(), cfg_.generators, cfg_.bootstrap_k, cfg_.alpha,
        derive_seed(cfg_.seed, "bootstrap"));
    const fs::path d = dir() / "matrix";
    write_json(d / "matrix.json", to_json(m));
    write_file(d / "acc.csv", matrix_csv(m.generators, m.acc.acc));
    write_file(d / "gap.csv", matrix_csv(m.generators, m.gap));
    write_file(d / "mean_gap.csv", matrix_csv(m.generators, m.mean_gap));
    write_file(d / "p_values.csv", matrix_csv(m.generators, m.p_values));
    write_file(d / "significance.csv", significance_csv(m));
    out_ << "matrix: " << m.generators.size() << "x" << m.generators.size() << " with "
         << m.resamples << " bootstrap resamples\n";
  }

  void graph(const std::string& kind, std::optional<double> threshold, bool require_significance) {
    const AccGapMatrix m = load_matrix();
    std::vector<GenGraph> graphs;
    if (kind == "good" || kind == "all") {
      const std::vector<double> ts =
          threshold && kind == "good" ? std::vector<double>{*threshold} : cfg_.good_thresholds;
      for (double t : ts) graphs.push_back(good_graph(m, t, require_significance));
    }
    if (kind == "poor" || kind == "all") {
      graphs.push_back(poor_graph(m, threshold && kind == "poor" ? *threshold : cfg_.poor_threshold));
    }
    for (const auto& g : graphs) {
      const std::string stem = std::string(g.kind == GraphKind::kGood ? "good_" : "poor_") +
                               threshold_tag(g.threshold) + (g.require_significance ? "_sig" : "");
      write_file(dir() / "graphs" / (stem + ".dot"), export_dot(g, cfg_.pairs));
      write_json(dir() / "graphs" / (stem + ".json"), to_json(g));
      out_ << "graph: " << stem << " with " << g.edges.size() << " edges\n";
    }
  }

  void mix_train() {
    const auto machine = load_machine_train();
    std::size_t smallest = SIZE_MAX;
    for (const auto& [_, samples] : machine) {
      smallest = std::min<std::size_t>(smallest, std::count_if(samples.begin(), samples.end(), [](const auto& s) {
        return s.label == Label::kMachine;
      }));
    }
    MixSpec spec;
    spec.included_generators = cfg_.generators;
    spec.per_generator_machine_quota =
        cfg_.mix_quota.value_or(default_quota(smallest, cfg_.generators.size()));
    spec.human_source = "split/human_train.jsonl";
    spec.seed = derive_seed(cfg_.seed, "mix");
    spec.epochs_override = cfg_.mix_train.epochs;
    train_mix(spec, "data-mix", machine);
    write_json(dir() / "mix" / "index.json", {{"baseline", "data-mix"}, {"pruned", nlohmann::json::array()}});
  }

  void prune(std::vector<std::vector<std::string>> sets, const std::string& name,
             std::optional<QuotaMode> mode) {
    if (sets.empty()) sets = cfg_.prune_sets;
    if (!name.empty() && sets.size() != 1) {
      throw Error(ErrorCode::kInvalidArgument, "--name needs exactly one --remove set");
    }
    const MixSpec base = mix_spec_from_json(read_json(dir() / "mix" / "data-mix.json"));
    const auto machine = load_machine_train();
    nlohmann::json index = read_json(dir() / "mix" / "index.json");
    auto pruned = index.at("pruned").get<std::vector<std::string>>();
    for (const auto& remove : sets) {
      const MixSpec spec = xgen::prune(base, remove, mode.value_or(cfg_.quota_mode));
      const std::string model_name = name.empty() ? "minus-" + join(remove, "+") : name;
      train_mix(spec, model_name, machine);
      if (std::find(pruned.begin(), pruned.end(), model_name) == pruned.end()) {
        pruned.push_back(model_name);
      }
    }
    index["pruned"] = pruned;
    write_json(dir() / "mix" / "index.json", index);
  }

  void suite() {
    const ModelSet models = load_models();
    const TestSets tests = load_tests();
    std::vector<const DetectorModel*> members;
    for (const auto& gen : cfg_.generators) members.push_back(&models.at(gen));

    std::vector<NamedReport> reports;
    reports.push_back({"vote", evaluate_suite(ensemble_predictor(members, EnsembleRule::kVote),
                                              tests, cfg_.generators)});
    reports.push_back({"prob-avg",
                       evaluate_suite(ensemble_predictor(members, EnsembleRule::kProbAvg), tests,
                                      cfg_.generators)});
    const nlohmann::json index = read_json(dir() / "mix" / "index.json");
    std::vector<std::string> mixed{index.at("baseline").get<std::string>()};
    for (const auto& p : index.at("pruned")) mixed.push_back(p.get<std::string>());
    for (const auto& name : mixed) {
      const DetectorModel model = load_model(dir() / "models" / (name + ".json"));
      reports.push_back({name, evaluate_suite(single_predictor(model), tests, cfg_.generators)});
    }
    nlohmann::json names = nlohmann::json::array();
    for (const auto& r : reports) {
      write_json(dir() / "suite" / (r.name + ".json"), to_json(r.report));
      write_file(dir() / "suite" / (r.name + ".csv"), suite_csv(r.report));
      names.push_back(r.name);
      out_ << "suite: " << r.name << " average " << format_fixed(r.report.average * 100, 1)
           << " worst-case " << format_fixed(r.report.worst_case * 100, 1) << " ("
           << r.report.worst_generator << ")\n";
    }
    write_json(dir() / "suite" / "index.json", {{"reports", names}, {"baseline", mixed.front()}});
  }

  void report() {
    const AccGapMatrix m = load_matrix();
    const fs::path d = dir() / "report";
    write_file(d / "heatmap.csv", heatmap_csv(m));
    write_file(d / "direction.csv", direction_table(m, cfg_.pairs));
    write_file(d / "direction.txt", direction_text(m, cfg_.pairs));

    std::vector<GenGraph> graphs;
    for (double t : cfg_.good_thresholds) graphs.push_back(good_graph(m, t, cfg_.require_significance));
    graphs.push_back(poor_graph(m, cfg_.poor_threshold));

    std::vector<NamedReport> suites;
    const fs::path suite_index = dir() / "suite" / "index.json";
    if (fs::exists(suite_index)) {
      const nlohmann::json index = read_json(suite_index);
      for (const auto& n : index.at("reports")) {
        const std::string name = n.get<std::string>();
        suites.push_back({name, suite_report_from_json(read_json(dir() / "suite" / (name + ".json")))});
      }
      const std::vector<std::string> ensembles{"vote", "prob-avg"};
      write_file(d / "suite_table.csv",
                 suite_table(suites, index.at("baseline").get<std::string>(), false, ensembles));
    }
    write_json(d / "summary.json", summary_json(m, graphs, suites));
    out_ << "report: written to " << d.string() << "\n";
  }

  void all() {
    if (cfg_.fixtures) fixture_gen();
    split(std::nullopt);
    train({});
    matrix();
    graph("all", std::nullopt, cfg_.require_significance);
    mix_train();
    prune({}, "", std::nullopt);
    suite();
    report();
  }

 private:
  fs::path dir() const { return cfg_.out_dir; }

  fs::path corpus_path(const std::string& id) const {
    auto it = cfg_.corpora.find(id);
    return it != cfg_.corpora.end() ? it->second : dir() / "corpora" / (id + ".jsonl");
  }

  fs::path paired(const std::string& gen, const std::string& part) const {
    return dir() / "paired" / gen / (part + ".jsonl");
  }

  fs::path model_path(const std::string& gen) const { return dir() / "models" / (gen + ".json"); }

  static CorpusSplit split_corpus(const Corpus& c, const SplitSpec& spec) { return xgen::split(c, spec); }

  DetectorModel train_detector(const std::vector<TextSample>& data, const TrainConfig& tc) {
    return xgen::train(data, cfg_.featurizer, tc, [](int epoch, double loss) {
      log()->debug("epoch {} objective {:.6f}", epoch, loss);
    });
  }

  void train_mix(const MixSpec& spec, const std::string& name,
                 const std::map<std::string, std::vector<TextSample>>& machine) {
    const auto human = read_samples(dir() / "split" / "human_train.jsonl");
    const auto data = build_mix(machine, human, spec);
    TrainConfig tc = cfg_.mix_train;
    tc.epochs = spec.epochs_override;
    tc.seed = derive_seed(cfg_.seed, "train:mix");
    save_model(train_detector(data, tc), dir() / "models" / (name + ".json"));
    write_json(dir() / "mix" / (name + ".json"), to_json(spec));
    out_ << "mix-train: " << name << " on " << data.size() << " samples ("
         << spec.included_generators.size() << " generators x " << spec.per_generator_machine_quota
         << ")\n";
  }

  std::map<std::string, std::vector<TextSample>> load_machine_train() const {
    std::map<std::string, std::vector<TextSample>> out;
    for (const auto& gen : cfg_.generators) out[gen] = read_samples(paired(gen, "train"));
    return out;
  }

  ModelSet load_models() const {
    ModelSet models;
    for (const auto& gen : cfg_.generators) models.emplace(gen, load_model(model_path(gen)));
    return models;
  }

  TestSets load_tests() const {
    TestSets tests;
    for (const auto& gen : cfg_.generators) tests.emplace(gen, read_samples(paired(gen, "test")));
    return tests;
  }

  AccGapMatrix load_matrix() const {
    return gap_matrix_from_json(read_json(dir() / "matrix" / "matrix.json"));
  }

  PipelineConfig cfg_;
  std::ostream& out_;
};

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-generator transfer harness for machine-generated-text detectors", "xgen"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  app.add_option("--config", config_path, "Pipeline config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the top-level seed");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");

  auto* ingest = app.add_subcommand("ingest", "Validate a JSONL corpus and copy it into <out>/corpora");
  std::string ingest_input, ingest_domain, ingest_name;
  bool check_only = false;
  ingest->add_option("--input", ingest_input, "JSONL file")->required();
  ingest->add_option("--domain", ingest_domain, "Expected domain (default: first record's)");
  ingest->add_option("--name", ingest_name, "Corpus id (default: file stem)");
  ingest->add_flag("--check-only", check_only, "Validate without copying");

  app.add_subcommand("fixture-gen", "Generate the synthetic medium/large scenario corpora");
  auto* split = app.add_subcommand("split", "Split, truncate and pair corpora");
  std::string ratios_text;
  split->add_option("--ratios", ratios_text, "train:dev:test ratios, e.g. 8:1:1");

  auto* train = app.add_subcommand("train", "Train one detector per generator");
  std::string train_gens;
  train->add_option("--generators", train_gens, "Comma-separated subset");

  app.add_subcommand("matrix", "Accuracy, Acc-Gap and bootstrap significance matrices");

  auto* graph = app.add_subcommand("graph", "Good/poor generalization graphs");
  std::string graph_kind = "all";
  double graph_threshold = 0.0;
  bool graph_sig = false;
  graph->add_option("--kind", graph_kind, "good, poor or all")
      ->check(CLI::IsMember({"good", "poor", "all"}));
  auto* threshold_opt = graph->add_option("--threshold", graph_threshold, "Gap threshold (fraction)");
  graph->add_flag("--require-significance", graph_sig,
                  "Drop good edges whose gap is significantly positive");

  app.add_subcommand("mix-train", "Train the data-mix detector on all generators");
  auto* prune = app.add_subcommand("prune", "Train detectors on mixes with generators removed");
  std::vector<std::string> prune_remove;
  std::string prune_name, quota_mode;
  prune->add_option("--remove", prune_remove, "Comma-separated generators to drop (repeatable)");
  prune->add_option("--name", prune_name, "Model name for a single removal set");
  prune->add_option("--quota-mode", quota_mode, "fixed or preserve_total")
      ->check(CLI::IsMember({"fixed", "preserve_total"}));

  app.add_subcommand("suite", "Average/worst-case accuracy of ensembles and mixed detectors");
  app.add_subcommand("report", "Heatmap, direction table, suite table and summary");
  app.add_subcommand("pipeline", "Run every stage in order");

  std::vector<const char*> argv{"xgen"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ERROR Usage: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();

    if (name == "ingest") {
      PipelineConfig cfg;
      if (!config_path.empty()) cfg = load_config(config_path);
      if (out_opt->count()) cfg.out_dir = out_dir;
      const std::string corpus_name =
          ingest_name.empty() ? fs::path(ingest_input).stem().string() : ingest_name;
      Pipeline(cfg, out).ingest(ingest_input, ingest_domain, corpus_name, !check_only);
      return 0;
    }

    if (config_path.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "--config is required for " + name);
    }
    PipelineConfig cfg = load_config(config_path);
    if (seed_opt->count()) cfg.seed = seed;
    if (out_opt->count()) cfg.out_dir = out_dir;
    Pipeline p(cfg, out);

    if (name == "fixture-gen") {
      p.fixture_gen();
    } else if (name == "split") {
      std::optional<std::array<std::uint32_t, 3>> ratios;
      if (!ratios_text.empty()) ratios = parse_ratios(ratios_text);
      p.split(ratios);
    } else if (name == "train") {
      p.train(split_list(train_gens, ','));
    } else if (name == "matrix") {
      p.matrix();
    } else if (name == "graph") {
      std::optional<double> t;
      if (threshold_opt->count()) t = graph_threshold;
      p.graph(graph_kind, t, graph_sig || cfg.require_significance);
    } else if (name == "mix-train") {
      p.mix_train();
    } else if (name == "prune") {
      std::vector<std::vector<std::string>> sets;
      for (const auto& r : prune_remove) sets.push_back(split_list(r, ','));
      std::optional<QuotaMode> mode;
      if (quota_mode == "fixed") mode = QuotaMode::kFixedQuota;
      if (quota_mode == "preserve_total") mode = QuotaMode::kPreserveTotal;
      p.prune(sets, prune_name, mode);
    } else if (name == "suite") {
      p.suite();
    } else if (name == "report") {
      p.report();
    } else if (name == "pipeline") {
      p.all();
    }
    return 0;
  } catch (const Error& e) {
    err << "ERROR " << to_string(e.code()) << ": " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const fs::filesystem_error& e) {
    err << "ERROR Io: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "ERROR Runtime: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace xgen
