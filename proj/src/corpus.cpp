#include "xgen/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {

namespace {

// Decodes one UTF-8 code point starting at pos. Invalid sequences decode as a
// single byte so that tokenization never fails.
char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    int c1 = cont(1);
    if (c1 >= 0) {
      len = 2;
      return (char32_t(b0 & 0x1F) << 6) | char32_t(c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      len = 3;
      return (char32_t(b0 & 0x0F) << 12) | (char32_t(c1) << 6) | char32_t(c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      len = 4;
      return (char32_t(b0 & 0x07) << 18) | (char32_t(c1) << 12) | (char32_t(c2) << 6) |
             char32_t(c3);
    }
  }
  len = 1;
  return 0xFFFD;
}

// White_Space property from the Unicode character database.
bool is_unicode_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

const std::string& require_string(const nlohmann::json& j, const char* field,
                                  std::size_t line_no) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) {
    throw Error(ErrorCode::kMissingField,
                "line " + std::to_string(line_no) + ": missing field \"" + field + "\"", line_no);
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::kMalformedLine,
                "line " + std::to_string(line_no) + ": field \"" + field + "\" is not a string",
                line_no);
  }
  return it->get_ref<const std::string&>();
}

bool blank(std::string_view text) { return tokenize_ws(text).empty(); }

}  // namespace

std::string_view to_string(Label label) {
  return label == Label::kHuman ? "human" : "machine";
}

Label parse_label(std::string_view text) {
  if (text == "human") return Label::kHuman;
  if (text == "machine") return Label::kMachine;
  throw Error(ErrorCode::kInvalidArgument, "unknown label \"" + std::string(text) + "\"");
}

std::string_view to_string(Partition part) {
  switch (part) {
    case Partition::kTrain: return "train";
    case Partition::kDev: return "dev";
    case Partition::kTest: return "test";
  }
  return "train";
}

Partition parse_partition(std::string_view text) {
  if (text == "train") return Partition::kTrain;
  if (text == "dev") return Partition::kDev;
  if (text == "test") return Partition::kTest;
  throw Error(ErrorCode::kInvalidArgument, "unknown partition \"" + std::string(text) + "\"");
}

void SplitSpec::validate() const {
  if (ratios[0] + ratios[1] + ratios[2] == 0) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must not all be zero");
  }
}

const Corpus& CorpusSplit::operator[](Partition part) const {
  switch (part) {
    case Partition::kTrain: return train;
    case Partition::kDev: return dev;
    case Partition::kTest: return test;
  }
  return train;
}

nlohmann::json to_json(const SplitManifest& manifest) {
  nlohmann::json assignments = nlohmann::json::object();
  for (const auto& [id, part] : manifest.assignments) assignments[id] = to_string(part);
  return {{"seed", manifest.seed},
          {"ratios", manifest.ratios},
          {"assignments", std::move(assignments)}};
}

SplitManifest manifest_from_json(const nlohmann::json& j) {
  SplitManifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.ratios = j.at("ratios").get<std::array<std::uint32_t, 3>>();
    for (const auto& [id, part] : j.at("assignments").items()) {
      m.assignments.emplace(id, parse_partition(part.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad split manifest: ") + e.what());
  }
  return m;
}

std::string source_id(const TextSample& sample) {
  auto it = sample.meta.find("source_id");
  return it != sample.meta.end() && it->is_string() ? it->get<std::string>() : sample.id;
}

nlohmann::json to_json(const TextSample& sample) {
  nlohmann::json j = {{"id", sample.id},
                      {"text", sample.text},
                      {"label", to_string(sample.label)},
                      {"generator_id", sample.generator_id},
                      {"domain", sample.domain}};
  if (!sample.meta.empty()) j["meta"] = sample.meta;
  return j;
}

TextSample sample_from_json(const nlohmann::json& j, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  if (!j.is_object()) {
    throw Error(ErrorCode::kMalformedLine, where + "record is not a JSON object", line_no);
  }
  TextSample s;
  s.id = require_string(j, "id", line_no);
  s.text = require_string(j, "text", line_no);
  const std::string& label = require_string(j, "label", line_no);
  s.domain = require_string(j, "domain", line_no);
  if (label == "human") {
    s.label = Label::kHuman;
  } else if (label == "machine") {
    s.label = Label::kMachine;
  } else {
    throw Error(ErrorCode::kMalformedLine, where + "label must be \"human\" or \"machine\"",
                line_no);
  }
  if (auto it = j.find("generator_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw Error(ErrorCode::kMalformedLine, where + "generator_id is not a string", line_no);
    }
    s.generator_id = it->get<std::string>();
  } else if (s.label == Label::kMachine) {
    throw Error(ErrorCode::kMissingField, where + "missing field \"generator_id\"", line_no);
  }
  if (auto it = j.find("meta"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) {
      throw Error(ErrorCode::kMalformedLine, where + "meta is not an object", line_no);
    }
    s.meta = *it;
  }
  if (s.id.empty()) throw Error(ErrorCode::kInvalidSample, where + "empty id", line_no);
  if (blank(s.text)) throw Error(ErrorCode::kInvalidSample, where + "blank text", line_no);
  if (s.label == Label::kMachine && s.generator_id.empty()) {
    throw Error(ErrorCode::kInvalidSample, where + "machine sample without generator_id",
                line_no);
  }
  if (s.label == Label::kHuman && !s.generator_id.empty()) {
    throw Error(ErrorCode::kInvalidSample, where + "human sample with generator_id", line_no);
  }
  return s;
}

namespace {

Corpus parse_lines(std::string_view content, std::string_view expected_domain,
                   bool check_domain) {
  Corpus corpus;
  corpus.domain = std::string(expected_domain);
  corpus.source_digest = sha256_hex(content);
  std::set<std::string, std::less<>> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorCode::kMalformedLine,
                  "line " + std::to_string(line_no) + ": not valid JSON", line_no);
    }
    TextSample s = sample_from_json(j, line_no);
    if (corpus.domain.empty()) corpus.domain = s.domain;
    if (check_domain && s.domain != corpus.domain) {
      throw Error(ErrorCode::kDomainMismatch,
                  "line " + std::to_string(line_no) + ": domain \"" + s.domain +
                      "\" != expected \"" + corpus.domain + "\"",
                  line_no);
    }
    if (!ids.insert(s.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id \"" + s.id + "\"", line_no);
    }
    corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace

Corpus parse_jsonl(std::string_view content, std::string_view expected_domain) {
  return parse_lines(content, expected_domain, true);
}

Corpus ingest_jsonl(const std::filesystem::path& path, std::string_view expected_domain) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kIo, "no such file: " + path.string());
  }
  return parse_jsonl(read_file(path), expected_domain);
}

std::string to_jsonl(std::span<const TextSample> samples) {
  std::string out;
  for (const auto& s : samples) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, std::span<const TextSample> samples) {
  write_file(path, to_jsonl(samples));
}

std::vector<TextSample> read_samples(const std::filesystem::path& path) {
  return parse_lines(read_file(path), "", false).samples;
}

std::vector<std::string> tokenize_ws(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  while (pos < text.size()) {
    std::size_t len = 1;
    char32_t c = decode_utf8(text, pos, len);
    if (is_unicode_space(c)) {
      if (start != std::string_view::npos) {
        tokens.emplace_back(text.substr(start, pos - start));
        start = std::string_view::npos;
      }
    } else if (start == std::string_view::npos) {
      start = pos;
    }
    pos += len;
  }
  if (start != std::string_view::npos) tokens.emplace_back(text.substr(start));
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens, std::size_t count) {
  count = std::min(count, tokens.size());
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string make_prompt(const TextSample& sample, std::size_t n_tokens) {
  auto tokens = tokenize_ws(sample.text);
  if (tokens.empty()) {
    throw Error(ErrorCode::kEmptyText, "sample \"" + sample.id + "\" has no tokens");
  }
  return join_tokens(tokens, n_tokens);
}

TextSample truncate_length(TextSample sample, std::size_t max_tokens) {
  auto tokens = tokenize_ws(sample.text);
  if (tokens.size() > max_tokens) sample.text = join_tokens(tokens, max_tokens);
  return sample;
}

std::array<std::size_t, 3> split_sizes(std::size_t n,
                                       const std::array<std::uint32_t, 3>& ratios) {
  const std::uint64_t total = std::uint64_t(ratios[0]) + ratios[1] + ratios[2];
  std::array<std::size_t, 3> sizes{};
  if (total == 0) return sizes;
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = static_cast<std::size_t>((std::uint64_t(n) * ratios[i]) / total);
    assigned += sizes[i];
  }
  for (int i = 0; i < 3; ++i) {
    if (ratios[i] > 0) {
      sizes[i] += n - assigned;
      break;
    }
  }
  return sizes;
}

CorpusSplit split(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> order(corpus.samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(spec.seed, "split"));
  rng.shuffle(std::span(order));

  const auto sizes = split_sizes(order.size(), spec.ratios);
  CorpusSplit out;
  Corpus* parts[3] = {&out.train, &out.dev, &out.test};
  std::size_t pos = 0;
  for (int p = 0; p < 3; ++p) {
    parts[p]->domain = corpus.domain;
    parts[p]->source_digest = corpus.source_digest;
    for (std::size_t i = 0; i < sizes[p]; ++i) {
      parts[p]->samples.push_back(corpus.samples[order[pos++]]);
    }
  }
  return out;
}

SplitManifest make_manifest(const CorpusSplit& parts, const SplitSpec& spec) {
  SplitManifest m;
  m.seed = spec.seed;
  m.ratios = spec.ratios;
  for (Partition p : {Partition::kTrain, Partition::kDev, Partition::kTest}) {
    for (const auto& s : parts[p].samples) m.assignments[s.id] = p;
  }
  return m;
}

CorpusSplit apply_manifest(const Corpus& corpus, const SplitManifest& manifest) {
  CorpusSplit out;
  Corpus* parts[3] = {&out.train, &out.dev, &out.test};
  for (Corpus* c : parts) {
    c->domain = corpus.domain;
    c->source_digest = corpus.source_digest;
  }
  for (const auto& s : corpus.samples) {
    const std::string key = source_id(s);
    auto it = manifest.assignments.find(key);
    if (it == manifest.assignments.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sample \"" + s.id + "\" has no split assignment for \"" + key + "\"");
    }
    parts[static_cast<int>(it->second)]->samples.push_back(s);
  }
  return out;
}

std::vector<TextSample> pair(const Corpus& human, const Corpus& machine,
                             std::string_view generator_id, std::uint64_t seed) {
  if (human.samples.empty()) throw Error(ErrorCode::kEmptyCorpus, "human corpus is empty");
  if (machine.samples.empty()) throw Error(ErrorCode::kEmptyCorpus, "machine corpus is empty");
  for (const auto& s : human.samples) {
    if (s.label != Label::kHuman) {
      throw Error(ErrorCode::kInvalidArgument, "non-human sample \"" + s.id + "\" on human side");
    }
  }
  for (const auto& s : machine.samples) {
    if (s.label != Label::kMachine || s.generator_id != generator_id) {
      throw Error(ErrorCode::kInvalidArgument, "sample \"" + s.id +
                                                   "\" is not machine text from \"" +
                                                   std::string(generator_id) + "\"");
    }
  }

  const std::size_t n = std::min(human.samples.size(), machine.samples.size());
  auto take = [&](const std::vector<TextSample>& side, std::string_view tag) {
    std::vector<std::size_t> idx(side.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (side.size() > n) {
      Rng rng(derive_seed(seed, tag));
      rng.shuffle(std::span(idx));
      idx.resize(n);
      std::sort(idx.begin(), idx.end());
    }
    std::vector<TextSample> out;
    out.reserve(n);
    for (auto i : idx) out.push_back(side[i]);
    return out;
  };

  std::vector<TextSample> out = take(human.samples, "pair:human");
  auto machines = take(machine.samples, "pair:machine");
  out.insert(out.end(), std::make_move_iterator(machines.begin()),
             std::make_move_iterator(machines.end()));
  Rng rng(derive_seed(seed, "pair:shuffle"));
  rng.shuffle(std::span(out));
  return out;
}

PairedDataset pair_splits(const CorpusSplit& human, const CorpusSplit& machine,
                          std::string_view generator_id, std::uint64_t seed) {
  PairedDataset ds;
  ds.generator_id = std::string(generator_id);
  auto part = [&](Partition p) -> std::vector<TextSample> {
    // Tiny corpora can leave a partition empty on both sides.
    if (human[p].samples.empty() && machine[p].samples.empty()) return {};
    return pair(human[p], machine[p], generator_id, derive_seed(seed, to_string(p)));
  };
  ds.train = part(Partition::kTrain);
  ds.dev = part(Partition::kDev);
  ds.test = part(Partition::kTest);
  return ds;
}

}  // namespace xgen
