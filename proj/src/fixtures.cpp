#include "xgen/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {

namespace {

constexpr char kContextSep = '\x1f';

const std::vector<std::string>& determiners() {
  static const std::vector<std::string> w{"the", "a", "this", "that", "every", "one", "each", "some"};
  return w;
}
const std::vector<std::string>& nouns() {
  static const std::vector<std::string> w{
      "city",    "council", "river",   "market", "school",  "teacher", "garden", "report",
      "village", "museum",  "player",  "season", "company", "worker",  "bridge", "station",
      "doctor",  "family",  "church",  "island", "harbor",  "farmer",  "singer", "library",
      "mayor",   "court",   "storm",   "forest", "tower",   "student", "engine", "festival",
      "army",    "castle",  "valley",  "author", "film",    "novel",   "team",   "coach",
      "airport", "hospital", "painter", "census", "railway", "treaty", "kingdom", "province"};
  return w;
}
const std::vector<std::string>& verbs() {
  static const std::vector<std::string> w{
      "visited",  "built",    "described", "opened",    "closed",   "praised",  "watched",
      "joined",   "crossed",  "reported",  "followed",  "replaced", "supported", "found",
      "defended", "designed", "announced", "welcomed",  "reviewed", "painted",  "protected",
      "restored", "funded",   "studied",   "recorded",  "managed",  "entered",  "left",
      "criticized", "approved", "launched", "discovered"};
  return w;
}
const std::vector<std::string>& adjectives() {
  static const std::vector<std::string> w{
      "old",    "new",     "small",    "large",   "quiet",   "busy",    "local",  "famous",
      "early",  "late",    "northern", "southern", "wooden", "ancient", "modern", "rural",
      "public", "private", "narrow",   "broad",   "bright",  "dark",    "annual", "central",
      "coastal", "eastern", "western",  "royal",   "simple",  "strange"};
  return w;
}
const std::vector<std::string>& adverbs() {
  static const std::vector<std::string> w{
      "quickly", "slowly", "again", "together", "often", "rarely", "yesterday", "today",
      "openly",  "twice",  "later", "recently", "nearby", "abroad", "briefly",  "carefully"};
  return w;
}
const std::vector<std::string>& prepositions() {
  static const std::vector<std::string> w{"in", "near", "across", "behind", "under", "beside",
                                          "from", "toward", "through", "after"};
  return w;
}

// Discourse markers that ordinary synthetic prose never uses.
const std::vector<std::string>& signature_pool() {
  static const std::vector<std::string> w{
      "moreover", "notably", "indeed",  "overall",     "furthermore", "essentially",
      "importantly", "ultimately", "consequently", "additionally", "remarkably", "arguably"};
  return w;
}

// Zipfian choice over a style-specific ranking of one word class.
class WordClass {
 public:
  WordClass(const std::vector<std::string>& words, double exponent, std::uint64_t seed)
      : words_(words) {
    std::vector<std::size_t> rank(words.size());
    std::iota(rank.begin(), rank.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span(rank));
    order_ = rank;
    cumulative_.resize(words.size());
    double acc = 0.0;
    for (std::size_t r = 0; r < words.size(); ++r) {
      acc += 1.0 / std::pow(double(r + 1), exponent);
      cumulative_[r] = acc;
    }
    for (double& c : cumulative_) c /= acc;
  }

  const std::string& pick(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t r = std::min<std::size_t>(it - cumulative_.begin(), words_.size() - 1);
    return words_[order_[r]];
  }

 private:
  const std::vector<std::string>& words_;
  std::vector<std::size_t> order_;
  std::vector<double> cumulative_;
};

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = char(w[0] - 'a' + 'A');
  return w;
}

struct ProseGenerator {
  explicit ProseGenerator(const ProseStyle& style)
      : style_(style),
        det_(determiners(), style.zipf_exponent, derive_seed(style.seed, "det")),
        noun_(nouns(), style.zipf_exponent, derive_seed(style.seed, "noun")),
        verb_(verbs(), style.zipf_exponent, derive_seed(style.seed, "verb")),
        adj_(adjectives(), style.zipf_exponent, derive_seed(style.seed, "adj")),
        adv_(adverbs(), style.zipf_exponent, derive_seed(style.seed, "adv")),
        prep_(prepositions(), style.zipf_exponent, derive_seed(style.seed, "prep")) {}

  // Appends one sentence; the final word carries the period.
  void sentence(Rng& rng, std::vector<std::string>& out) const {
    std::vector<std::string> s;
    if (!style_.signature_words.empty() && rng.uniform() < style_.signature_rate) {
      s.push_back(style_.signature_words[rng.index(style_.signature_words.size())] + ",");
    }
    auto noun_phrase = [&](bool adjective) {
      s.push_back(det_.pick(rng));
      if (adjective) s.push_back(adj_.pick(rng));
      s.push_back(noun_.pick(rng));
    };
    switch (rng.index(4)) {
      case 0:
        noun_phrase(true);
        s.push_back(verb_.pick(rng));
        noun_phrase(false);
        s.push_back(prep_.pick(rng));
        noun_phrase(false);
        break;
      case 1:
        noun_phrase(false);
        s.push_back(verb_.pick(rng));
        s.push_back(adv_.pick(rng));
        break;
      case 2:
        noun_phrase(false);
        s.push_back(prep_.pick(rng));
        noun_phrase(true);
        s.push_back(verb_.pick(rng));
        noun_phrase(false);
        s.back() += ",";
        s.push_back("and");
        noun_phrase(false);
        s.push_back(verb_.pick(rng));
        break;
      default:
        noun_phrase(true);
        s.push_back(verb_.pick(rng));
        noun_phrase(true);
        s.push_back(adv_.pick(rng));
        break;
    }
    s.front() = capitalize(s.front());
    s.back() += ".";
    out.insert(out.end(), s.begin(), s.end());
  }

  const ProseStyle& style_;
  WordClass det_, noun_, verb_, adj_, adv_, prep_;
};

}  // namespace

std::string ChainModel::context_key(std::span<const std::string> context) {
  std::string key;
  for (std::size_t i = 0; i < context.size(); ++i) {
    if (i) key += kContextSep;
    key += context[i];
  }
  return key;
}

std::uint64_t ChainModel::total_transitions() const {
  std::uint64_t total = 0;
  for (const auto& [_, next] : transitions) {
    for (const auto& [__, c] : next) total += c;
  }
  return total;
}

ChainModel fit_chain(const Corpus& corpus, int order) {
  if (order < 1) throw Error(ErrorCode::kInvalidArgument, "chain order must be >= 1");
  ChainModel chain;
  chain.order = order;
  chain.base_corpus_digest = sha256_hex(to_jsonl(corpus.samples));
  std::size_t token_count = 0;
  for (const auto& s : corpus.samples) {
    const auto tokens = tokenize_ws(s.text);
    if (tokens.empty()) continue;
    token_count += tokens.size();
    std::vector<std::string> ctx(static_cast<std::size_t>(order), std::string{kBeginToken});
    auto emit = [&](const std::string& next) {
      chain.transitions[ChainModel::context_key(ctx)][next] += 1;
      ctx.erase(ctx.begin());
      ctx.push_back(next);
    };
    for (const auto& t : tokens) {
      chain.vocab.insert(t);
      emit(t);
    }
    emit(std::string(kEndToken));
  }
  if (token_count <= std::size_t(order)) {
    throw Error(ErrorCode::kCorpusTooSmall,
                "corpus has " + std::to_string(token_count) + " tokens; need more than the order " +
                    std::to_string(order));
  }
  return chain;
}

std::string_view to_string(SizeTag tag) { return tag == SizeTag::kMedium ? "medium" : "large"; }

std::string FamilyVariant::generator_id() const {
  return family_id + "-" + std::string(to_string(size_tag));
}

void FamilyVariant::validate() const {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "top_p must lie in (0, 1]");
  }
}

FamilyVariant FamilyVariant::medium(std::string family_id, std::uint64_t seed) {
  return {std::move(family_id), SizeTag::kMedium, 1.0, 0.96, seed};
}

FamilyVariant FamilyVariant::large(std::string family_id, std::uint64_t seed) {
  return {std::move(family_id), SizeTag::kLarge, 0.7, 0.96, seed};
}

std::vector<TokenProb> temperature_distribution(const std::map<std::string, std::uint64_t>& counts,
                                                double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  std::vector<TokenProb> dist;
  double max_logit = -INFINITY;
  for (const auto& [tok, c] : counts) {
    if (c == 0) continue;
    const double logit = std::log(double(c)) / temperature;
    dist.push_back({tok, logit});
    max_logit = std::max(max_logit, logit);
  }
  double z = 0.0;
  for (auto& e : dist) {
    e.p = std::exp(e.p - max_logit);
    z += e.p;
  }
  for (auto& e : dist) e.p /= z;
  std::stable_sort(dist.begin(), dist.end(),
                   [](const TokenProb& a, const TokenProb& b) { return a.p > b.p; });
  return dist;
}

std::vector<TokenProb> nucleus(std::vector<TokenProb> sorted, double top_p) {
  double mass = 0.0;
  std::size_t keep = 0;
  while (keep < sorted.size()) {
    mass += sorted[keep].p;
    ++keep;
    if (mass >= top_p) break;
  }
  sorted.resize(keep);
  double z = 0.0;
  for (const auto& e : sorted) z += e.p;
  for (auto& e : sorted) e.p /= z;
  return sorted;
}

std::vector<TokenProb> next_token_distribution(const ChainModel& chain,
                                               std::span<const std::string> context,
                                               double temperature, double top_p) {
  auto it = chain.transitions.find(ChainModel::context_key(context));
  if (it == chain.transitions.end()) {
    throw Error(ErrorCode::kUnknownContext, "context was never observed");
  }
  return nucleus(temperature_distribution(it->second, temperature), top_p);
}

double entropy(std::span<const TokenProb> dist) {
  double h = 0.0;
  for (const auto& e : dist) {
    if (e.p > 0.0) h -= e.p * std::log(e.p);
  }
  return h;
}

std::string sample_text(const ChainModel& chain, const FamilyVariant& variant,
                        std::string_view prompt, std::size_t max_tokens,
                        bool unknown_context_fallback) {
  variant.validate();
  const auto k = static_cast<std::size_t>(chain.order);
  std::vector<std::string> out = tokenize_ws(prompt);
  if (out.size() > max_tokens) out.resize(max_tokens);

  std::vector<std::string> ctx(k, std::string(kBeginToken));
  for (const auto& t : out) {
    ctx.erase(ctx.begin());
    ctx.push_back(t);
  }
  if (!chain.transitions.contains(ChainModel::context_key(ctx))) {
    if (!unknown_context_fallback) {
      throw Error(ErrorCode::kUnknownContext, "prompt ends in an unseen context");
    }
    ctx.assign(k, std::string(kBeginToken));
  }

  Rng rng(variant.seed);
  while (out.size() < max_tokens) {
    const auto dist = next_token_distribution(chain, ctx, variant.temperature, variant.top_p);
    const double u = rng.uniform();
    double acc = 0.0;
    const std::string* chosen = &dist.back().token;
    for (const auto& e : dist) {
      acc += e.p;
      if (u < acc) {
        chosen = &e.token;
        break;
      }
    }
    if (*chosen == kEndToken) break;
    out.push_back(*chosen);
    ctx.erase(ctx.begin());
    ctx.push_back(*chosen);
  }
  return join_tokens(out, out.size());
}

std::map<std::string, Corpus> build_family_corpora(const Corpus& human,
                                                   std::span<const FamilySpec> families,
                                                   std::size_t samples_per_variant,
                                                   std::size_t prompt_tokens,
                                                   std::size_t max_tokens) {
  if (human.samples.size() < samples_per_variant) {
    throw Error(ErrorCode::kInsufficientSamples,
                "human corpus has " + std::to_string(human.samples.size()) + " samples, need " +
                    std::to_string(samples_per_variant));
  }
  std::map<std::string, Corpus> out;
  for (const auto& fam : families) {
    for (const auto& variant : fam.variants) {
      const std::string gen = variant.generator_id();
      Corpus& c = out[gen];
      c.domain = human.domain;
      for (std::size_t i = 0; i < samples_per_variant; ++i) {
        const TextSample& h = human.samples[i];
        FamilyVariant v = variant;
        v.seed = derive_seed(variant.seed, h.id);
        TextSample m;
        m.id = h.id + ":" + gen;
        m.text = sample_text(fam.chain, v, make_prompt(h, prompt_tokens), max_tokens);
        m.label = Label::kMachine;
        m.generator_id = gen;
        m.domain = human.domain;
        m.meta = {{"source_id", h.id},
                  {"family", fam.family_id},
                  {"size", std::string(to_string(variant.size_tag))}};
        c.samples.push_back(std::move(m));
      }
      c.source_digest = sha256_hex(to_jsonl(c.samples));
    }
  }
  return out;
}

Corpus synth_corpus(const ProseStyle& style, std::size_t n_samples,
                    std::size_t tokens_per_sample, std::string_view domain,
                    std::string_view id_prefix) {
  const ProseGenerator gen(style);
  Corpus c;
  c.domain = std::string(domain);
  const std::size_t width = std::max<std::size_t>(5, std::to_string(n_samples).size());
  for (std::size_t i = 0; i < n_samples; ++i) {
    Rng rng(derive_seed(style.seed, static_cast<std::uint64_t>(i)));
    std::vector<std::string> tokens;
    while (tokens.size() < tokens_per_sample) gen.sentence(rng, tokens);
    tokens.resize(tokens_per_sample);
    std::string idx = std::to_string(i);
    idx.insert(0, width - std::min(width, idx.size()), '0');
    TextSample s;
    s.id = std::string(id_prefix) + idx;
    s.text = join_tokens(tokens, tokens.size());
    s.label = Label::kHuman;
    s.domain = c.domain;
    c.samples.push_back(std::move(s));
  }
  c.source_digest = sha256_hex(to_jsonl(c.samples));
  return c;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  if (cfg.family_ids.empty()) throw Error(ErrorCode::kInvalidConfig, "scenario needs families");
  Scenario sc;
  ProseStyle human_style{"human", derive_seed(cfg.seed, "style:human"), cfg.human_zipf, {}, 0.0};
  // Longer than max_tokens so truncation has work to do.
  sc.human = synth_corpus(human_style, cfg.samples, cfg.max_tokens + 20, cfg.domain, "h");

  const auto& pool = signature_pool();
  for (std::size_t f = 0; f < cfg.family_ids.size(); ++f) {
    const std::string& fam = cfg.family_ids[f];
    ProseStyle style{fam, derive_seed(cfg.seed, "style:" + fam), cfg.family_zipf, {}, cfg.signature_rate};
    for (std::size_t k = 0; k < 3; ++k) style.signature_words.push_back(pool[(3 * f + k) % pool.size()]);
    const Corpus base = synth_corpus(style, cfg.base_samples_per_family, cfg.max_tokens, cfg.domain,
                                     "base-" + fam + "-");
    FamilySpec spec;
    spec.family_id = fam;
    spec.chain = fit_chain(base, cfg.order);
    FamilyVariant medium = FamilyVariant::medium(fam, derive_seed(cfg.seed, "variant:" + fam + ":medium"));
    FamilyVariant large = FamilyVariant::large(fam, derive_seed(cfg.seed, "variant:" + fam + ":large"));
    medium.temperature = cfg.tau_medium;
    large.temperature = cfg.tau_large;
    medium.top_p = large.top_p = cfg.top_p;
    spec.variants = {medium, large};
    sc.generator_ids.push_back(medium.generator_id());
    sc.generator_ids.push_back(large.generator_id());
    sc.families.push_back(std::move(spec));
  }
  sc.machine = build_family_corpora(sc.human, sc.families, cfg.samples, cfg.prompt_tokens,
                                    cfg.max_tokens);
  return sc;
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  try {
    c.family_ids = j.value("families", c.family_ids);
    c.samples = j.value("samples", c.samples);
    c.base_samples_per_family = j.value("base_samples_per_family", c.base_samples_per_family);
    c.order = j.value("order", c.order);
    c.tau_medium = j.value("tau_medium", c.tau_medium);
    c.tau_large = j.value("tau_large", c.tau_large);
    c.top_p = j.value("top_p", c.top_p);
    c.prompt_tokens = j.value("prompt_tokens", c.prompt_tokens);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.human_zipf = j.value("human_zipf", c.human_zipf);
    c.family_zipf = j.value("family_zipf", c.family_zipf);
    c.signature_rate = j.value("signature_rate", c.signature_rate);
    c.domain = j.value("domain", c.domain);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad fixtures config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const ScenarioConfig& c) {
  return {{"families", c.family_ids},
          {"samples", c.samples},
          {"base_samples_per_family", c.base_samples_per_family},
          {"order", c.order},
          {"tau_medium", c.tau_medium},
          {"tau_large", c.tau_large},
          {"top_p", c.top_p},
          {"prompt_tokens", c.prompt_tokens},
          {"max_tokens", c.max_tokens},
          {"human_zipf", c.human_zipf},
          {"family_zipf", c.family_zipf},
          {"signature_rate", c.signature_rate},
          {"domain", c.domain},
          {"seed", c.seed}};
}

nlohmann::json family_config_json(const Scenario& scenario) {
  nlohmann::json families = nlohmann::json::array();
  for (const auto& f : scenario.families) {
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& v : f.variants) {
      variants.push_back({{"generator_id", v.generator_id()},
                          {"size_tag", to_string(v.size_tag)},
                          {"temperature", v.temperature},
                          {"top_p", v.top_p},
                          {"seed", v.seed}});
    }
    families.push_back({{"family_id", f.family_id},
                        {"chain_order", f.chain.order},
                        {"chain_contexts", f.chain.transitions.size()},
                        {"chain_vocab", f.chain.vocab.size()},
                        {"base_corpus_digest", f.chain.base_corpus_digest},
                        {"variants", std::move(variants)}});
  }
  return {{"families", std::move(families)}};
}

}  // namespace xgen
