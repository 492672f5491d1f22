#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/corpus.hpp"

namespace xgen {

// Reserved sentinel tokens framing every text during chain fitting.
inline constexpr std::string_view kBeginToken = "<s>";
inline constexpr std::string_view kEndToken = "</s>";

// Word-level order-k Markov chain over whitespace tokens.
struct ChainModel {
  int order = 2;
  // Context key (k tokens joined by '\x1f') -> next token -> count.
  std::map<std::string, std::map<std::string, std::uint64_t>> transitions;
  std::set<std::string> vocab;
  std::string base_corpus_digest;

  static std::string context_key(std::span<const std::string> context);
  std::uint64_t total_transitions() const;
};

ChainModel fit_chain(const Corpus& corpus, int order = 2);

enum class SizeTag { kMedium, kLarge };

std::string_view to_string(SizeTag tag);

// Medium samples broadly (temperature 1.0), large narrowly (0.7); both use
// nucleus sampling at 0.96.
struct FamilyVariant {
  std::string family_id;
  SizeTag size_tag = SizeTag::kMedium;
  double temperature = 1.0;
  double top_p = 0.96;
  std::uint64_t seed = 0;

  std::string generator_id() const;
  void validate() const;

  static FamilyVariant medium(std::string family_id, std::uint64_t seed);
  static FamilyVariant large(std::string family_id, std::uint64_t seed);
};

struct TokenProb {
  std::string token;
  double p = 0.0;
};

// Counts -> probabilities sharpened by p_i ∝ p_i^(1/temperature), sorted by
// descending probability (ties by token).
std::vector<TokenProb> temperature_distribution(const std::map<std::string, std::uint64_t>& counts,
                                                double temperature);

// Smallest descending-probability prefix with mass >= top_p, renormalized.
std::vector<TokenProb> nucleus(std::vector<TokenProb> sorted, double top_p);

std::vector<TokenProb> next_token_distribution(const ChainModel& chain,
                                               std::span<const std::string> context,
                                               double temperature, double top_p);

double entropy(std::span<const TokenProb> dist);

// Continues `prompt` autoregressively. The result starts with the prompt
// tokens and holds at most max_tokens tokens. A prompt whose trailing
// context was never seen restarts from the begin context unless
// unknown_context_fallback is false, which raises UnknownContext.
std::string sample_text(const ChainModel& chain, const FamilyVariant& variant,
                        std::string_view prompt, std::size_t max_tokens = 120,
                        bool unknown_context_fallback = true);

struct FamilySpec {
  std::string family_id;
  ChainModel chain;
  std::vector<FamilyVariant> variants;
};

// One machine corpus per variant, keyed by generator id. The first
// samples_per_variant human samples each contribute a prompt.
std::map<std::string, Corpus> build_family_corpora(const Corpus& human,
                                                   std::span<const FamilySpec> families,
                                                   std::size_t samples_per_variant,
                                                   std::size_t prompt_tokens = 20,
                                                   std::size_t max_tokens = 120);

// Template-grammar prose. Word choice is Zipfian over a style-specific
// ranking of each word class; signature words open sentences at
// `signature_rate`.
struct ProseStyle {
  std::string name;
  std::uint64_t seed = 0;
  double zipf_exponent = 0.6;
  std::vector<std::string> signature_words;
  double signature_rate = 0.0;
};

// Human-labelled synthetic corpus; ids are "<id_prefix><index>".
Corpus synth_corpus(const ProseStyle& style, std::size_t n_samples,
                    std::size_t tokens_per_sample, std::string_view domain,
                    std::string_view id_prefix);

// The reference medium/large scenario: a synthetic human corpus and, per
// family, a base corpus with its own word preferences and signature words.
struct ScenarioConfig {
  std::vector<std::string> family_ids{"fam-a", "fam-b", "fam-c"};
  std::size_t samples = 1000;
  std::size_t base_samples_per_family = 400;
  int order = 2;
  double tau_medium = 1.0;
  double tau_large = 0.7;
  double top_p = 0.96;
  std::size_t prompt_tokens = 20;
  std::size_t max_tokens = 120;
  double human_zipf = 0.6;
  double family_zipf = 1.2;
  double signature_rate = 0.35;
  std::string domain = "synthetic";
  std::uint64_t seed = 0;
};

struct Scenario {
  Corpus human;
  std::map<std::string, Corpus> machine;  // by generator id
  std::vector<FamilySpec> families;
  // Generator ids in family order, medium before large.
  std::vector<std::string> generator_ids;
};

Scenario build_scenario(const ScenarioConfig& cfg);

ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& cfg);
// Family config listing every variant; chains are summarized by digest.
nlohmann::json family_config_json(const Scenario& scenario);

}  // namespace xgen
