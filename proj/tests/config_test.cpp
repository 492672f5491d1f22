#include <gtest/gtest.h>

#include "test_support.hpp"
#include "xgen/config.hpp"
#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {
namespace {

ErrorCode code_of(const nlohmann::json& j) {
  try {
    config_from_json(j, "/base");
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "config accepted: " << j.dump();
  return ErrorCode::kIo;
}

TEST(Config, DefaultsFromMinimalJson) {
  const auto c = config_from_json(nlohmann::json{{"generators", {"a", "b"}}}, "/base");
  EXPECT_EQ(c.generators, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(c.prompt_tokens, 20u);
  EXPECT_EQ(c.max_tokens, 120u);
  EXPECT_EQ(c.ratios, (std::array<std::uint32_t, 3>{8, 1, 1}));
  EXPECT_EQ(c.bootstrap_k, 100u);
  EXPECT_EQ(c.good_thresholds, (std::vector<double>{0.01, 0.02, 0.04}));
  EXPECT_DOUBLE_EQ(c.poor_threshold, 0.20);
  EXPECT_EQ(c.train.epochs, 1);
  EXPECT_EQ(c.mix_train.epochs, 3);
  EXPECT_FALSE(c.fixtures.has_value());
}

TEST(Config, FullDocument) {
  const auto j = nlohmann::json::parse(R"({
    "seed": 7, "domain": "news", "generators": ["m", "l", "x"],
    "pairs": [["m", "l"]],
    "corpora": {"human": "data/h.jsonl", "m": "/abs/m.jsonl"},
    "protocol": {"prompt_tokens": 10, "max_tokens": 60, "ratios": [7, 2, 1]},
    "train": {"learning_rate": 0.01},
    "mix_train": {"learning_rate": 0.02},
    "evaluation": {"bootstrap_k": 50, "alpha": 0.01},
    "graph": {"good_thresholds": [0.03], "poor_threshold": 0.3, "require_significance": true},
    "mix": {"quota": 12, "quota_mode": "preserve_total", "prune_sets": [["l"], ["l", "x"]]},
    "fixtures": {"families": ["f"], "samples": 10},
    "out": "run"
  })");
  const auto c = config_from_json(j, "/base");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.pairs, (std::vector<Edge>{{"m", "l"}}));
  EXPECT_EQ(c.corpora.at("human"), std::filesystem::path("/base/data/h.jsonl"));
  EXPECT_EQ(c.corpora.at("m"), std::filesystem::path("/abs/m.jsonl"));
  EXPECT_EQ(c.ratios, (std::array<std::uint32_t, 3>{7, 2, 1}));
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.01);
  EXPECT_DOUBLE_EQ(c.mix_train.learning_rate, 0.02);
  EXPECT_EQ(c.mix_train.epochs, 3);
  EXPECT_EQ(c.bootstrap_k, 50u);
  EXPECT_TRUE(c.require_significance);
  EXPECT_EQ(c.mix_quota, 12u);
  EXPECT_EQ(c.quota_mode, QuotaMode::kPreserveTotal);
  EXPECT_EQ(c.prune_sets.size(), 2u);
  ASSERT_TRUE(c.fixtures.has_value());
  EXPECT_EQ(c.fixtures->family_ids, (std::vector<std::string>{"f"}));
  EXPECT_EQ(c.out_dir, std::filesystem::path("/base/run"));
}

TEST(Config, Rejections) {
  auto code = [](const char* text) { return code_of(nlohmann::json::parse(text)); };
  EXPECT_EQ(code(R"({})"), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code(R"({"generators": []})"), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code(R"({"generators": ["a", "a"]})"), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code(R"({"generators": ["human"]})"), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code(R"({"generators": ["a"], "pairs": [["a", "b"]]})"), ErrorCode::kUnknownGenerator);
  EXPECT_EQ(code(R"({"generators": ["a"], "mix": {"prune_sets": [["z"]]}})"), ErrorCode::kUnknownGenerator);
  EXPECT_EQ(code(R"({"generators": ["a"], "mix": {"quota_mode": "sometimes"}})"), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code(R"({"generators": ["a"], "evaluation": {"alpha": 1.5}})"), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code(R"({"generators": ["a"], "train": {"learning_rate": -1}})"), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code(R"({"generators": "a"})"), ErrorCode::kInvalidConfig);
}

TEST(Config, LoadFromFile) {
  testing::TempDir dir("config");
  write_file(dir / "c.json", R"({"generators": ["a"], "out": "o"})");
  const auto c = load_config(dir / "c.json");
  EXPECT_EQ(c.out_dir, dir.path() / "o");
  write_file(dir / "bad.json", "{nope");
  EXPECT_THROW(load_config(dir / "bad.json"), Error);
  EXPECT_THROW(load_config(dir / "absent.json"), Error);
}

}  // namespace
}  // namespace xgen
