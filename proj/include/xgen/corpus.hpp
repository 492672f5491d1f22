#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace xgen {

enum class Label { kHuman, kMachine };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

struct TextSample {
  std::string id;
  std::string text;
  Label label = Label::kHuman;
  std::string generator_id;  // empty iff label == kHuman
  std::string domain;
  // Free-form provenance (collector request parameters, fixture lineage).
  nlohmann::json meta = nlohmann::json::object();

  bool operator==(const TextSample&) const = default;
};

// meta["source_id"] when it is a string, otherwise the sample's own id.
std::string source_id(const TextSample& sample);

struct Corpus {
  std::vector<TextSample> samples;
  std::string domain;
  std::string source_digest;
};

// Human-side of every PairedDataset partition is 1:1 with the machine side.
struct PairedDataset {
  std::string generator_id;
  std::vector<TextSample> train;
  std::vector<TextSample> dev;
  std::vector<TextSample> test;
};

enum class Partition { kTrain = 0, kDev = 1, kTest = 2 };

std::string_view to_string(Partition part);
Partition parse_partition(std::string_view text);

struct SplitSpec {
  std::array<std::uint32_t, 3> ratios{8, 1, 1};
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorpusSplit {
  Corpus train;
  Corpus dev;
  Corpus test;

  const Corpus& operator[](Partition part) const;
};

// Persisted so downstream stages never re-randomize.
struct SplitManifest {
  std::uint64_t seed = 0;
  std::array<std::uint32_t, 3> ratios{8, 1, 1};
  std::map<std::string, Partition> assignments;
};

nlohmann::json to_json(const SplitManifest& manifest);
SplitManifest manifest_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TextSample& sample);
// Validates one record; line_no is used for error locations only.
TextSample sample_from_json(const nlohmann::json& j, std::size_t line_no);

// Parses JSON Lines content. Aborts with the first offending location.
Corpus parse_jsonl(std::string_view content, std::string_view expected_domain);
Corpus ingest_jsonl(const std::filesystem::path& path, std::string_view expected_domain);

std::string to_jsonl(std::span<const TextSample> samples);
void write_jsonl(const std::filesystem::path& path, std::span<const TextSample> samples);
// Reads a sample list without the single-domain check (paired partitions).
std::vector<TextSample> read_samples(const std::filesystem::path& path);

// Splits on runs of Unicode whitespace. Never yields empty tokens.
std::vector<std::string> tokenize_ws(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens, std::size_t count);

std::string make_prompt(const TextSample& sample, std::size_t n_tokens = 20);
TextSample truncate_length(TextSample sample, std::size_t max_tokens = 120);

// Partition sizes for n items: floor shares, remainder to the first
// partition with a nonzero ratio (train under the default ratios).
std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<std::uint32_t, 3>& ratios);

CorpusSplit split(const Corpus& corpus, const SplitSpec& spec);
SplitManifest make_manifest(const CorpusSplit& parts, const SplitSpec& spec);
// Assigns each sample by meta["source_id"] when present, otherwise by id.
// Samples with no assignment raise InvalidArgument.
CorpusSplit apply_manifest(const Corpus& corpus, const SplitManifest& manifest);

// One balanced partition: subsamples the larger side without replacement,
// then shuffles. Machine samples must belong to generator_id.
std::vector<TextSample> pair(const Corpus& human, const Corpus& machine,
                             std::string_view generator_id, std::uint64_t seed);

PairedDataset pair_splits(const CorpusSplit& human, const CorpusSplit& machine,
                          std::string_view generator_id, std::uint64_t seed);

}  // namespace xgen
