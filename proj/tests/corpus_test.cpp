#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "test_support.hpp"
#include "xgen/corpus.hpp"
#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {
namespace {

using testing::human;
using testing::machine;
using testing::TempDir;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no xgen::Error thrown";
  return ErrorCode::kIo;
}

TEST(Tokenize, CollapsesWhitespaceRuns) {
  EXPECT_EQ(tokenize_ws("a  b\tc"), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Tokenize, EmptyTextHasNoTokens) { EXPECT_TRUE(tokenize_ws("").empty()); }

TEST(Tokenize, PunctuationStaysAttached) {
  EXPECT_EQ(tokenize_ws("Hello, world!"), (std::vector<std::string>{"Hello,", "world!"}));
}

TEST(Tokenize, UnicodeSpacesSeparate) {
  // U+00A0 no-break space and U+3000 ideographic space.
  EXPECT_EQ(tokenize_ws("x\xC2\xA0y\xE3\x80\x80z\n"), (std::vector<std::string>{"x", "y", "z"}));
}

TEST(Prompt, TakesFirstTwentyTokens) {
  const auto s = human("a", testing::numbered_words(25));
  EXPECT_EQ(make_prompt(s, 20), testing::numbered_words(20));
}

TEST(Prompt, ShortTextIsWhole) {
  EXPECT_EQ(make_prompt(human("a", "one two three four five"), 20), "one two three four five");
}

TEST(Prompt, ZeroTokensIsEmpty) { EXPECT_EQ(make_prompt(human("a", "x y"), 0), ""); }

TEST(Prompt, IsPrefixOfTokens) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = human("a", testing::random_text(gen, 1 + gen() % 40));
    const std::size_t n = gen() % 45;
    const auto prompt = tokenize_ws(make_prompt(s, n));
    const auto full = tokenize_ws(s.text);
    ASSERT_EQ(prompt.size(), std::min(n, full.size()));
    EXPECT_TRUE(std::equal(prompt.begin(), prompt.end(), full.begin()));
  }
}

TEST(Truncate, CutsToMaxTokens) {
  const auto t = truncate_length(human("a", testing::numbered_words(300)), 120);
  EXPECT_EQ(t.text, testing::numbered_words(120));
}

TEST(Truncate, ShortTextUnchanged) {
  const auto s = human("a", testing::numbered_words(80) + "\n");
  EXPECT_EQ(truncate_length(s, 120), s);
}

TEST(Truncate, Idempotent) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = human("a", testing::random_text(gen, 1 + gen() % 200));
    const auto once = truncate_length(s, 120);
    EXPECT_EQ(truncate_length(once, 120), once);
    EXPECT_LE(tokenize_ws(once.text).size(), 120u);
  }
}

TEST(Ingest, ThreeValidRecords) {
  TempDir dir("ingest");
  write_file(dir / "h.jsonl",
             R"({"id":"1","text":"a b","label":"human","domain":"news"})"
             "\n"
             R"({"id":"2","text":"c d","label":"human","domain":"news"})"
             "\n"
             R"({"id":"3","text":"e f","label":"human","domain":"news","generator_id":null})"
             "\n");
  const Corpus c = ingest_jsonl(dir / "h.jsonl", "news");
  EXPECT_EQ(c.samples.size(), 3u);
  EXPECT_EQ(c.domain, "news");
  EXPECT_EQ(c.source_digest.size(), 64u);
}

TEST(Ingest, MissingLabelReportsLineAndField) {
  const std::string content =
      R"({"id":"1","text":"a b","label":"human","domain":"news"})"
      "\n"
      R"({"id":"2","text":"c d","domain":"news"})"
      "\n";
  try {
    parse_jsonl(content, "news");
    FAIL() << "expected MissingField";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingField);
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("\"label\""), std::string::npos);
  }
}

TEST(Ingest, FiveThousandRecords) {
  std::string content;
  for (int i = 0; i < 5000; ++i) {
    content += to_json(human("h" + std::to_string(i), "text number " + std::to_string(i))).dump();
    content += "\n";
  }
  EXPECT_EQ(parse_jsonl(content, "news").samples.size(), 5000u);
}

TEST(Ingest, RejectsBadRecords) {
  auto parse = [](const std::string& line) { return [line] { parse_jsonl(line + "\n", "news"); }; };
  EXPECT_EQ(code_of(parse("{not json")), ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of(parse("[1,2]")), ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of(parse(R"({"id":1,"text":"a","label":"human","domain":"news"})")),
            ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of(parse(R"({"id":"1","text":"a","label":"robot","domain":"news"})")),
            ErrorCode::kMalformedLine);
  EXPECT_EQ(code_of(parse(R"({"id":"1","text":"a","label":"machine","domain":"news"})")),
            ErrorCode::kMissingField);
  EXPECT_EQ(code_of(parse(R"({"id":"1","text":"  ","label":"human","domain":"news"})")),
            ErrorCode::kInvalidSample);
  EXPECT_EQ(code_of(parse(R"({"id":"1","text":"a","label":"human","domain":"news","generator_id":"g"})")),
            ErrorCode::kInvalidSample);
  EXPECT_EQ(code_of(parse(R"({"id":"1","text":"a","label":"human","domain":"wiki"})")),
            ErrorCode::kDomainMismatch);
  EXPECT_EQ(code_of([] {
              parse_jsonl(R"({"id":"1","text":"a","label":"human","domain":"news"})"
                          "\n"
                          R"({"id":"1","text":"b","label":"human","domain":"news"})",
                          "news");
            }),
            ErrorCode::kDuplicateId);
  EXPECT_EQ(code_of([] { ingest_jsonl("/nonexistent/xgen.jsonl", "news"); }), ErrorCode::kIo);
}

TEST(Ingest, EmptyExpectedDomainAdoptsFirstRecord) {
  const Corpus c = parse_jsonl(R"({"id":"1","text":"a","label":"human","domain":"wiki"})", "");
  EXPECT_EQ(c.domain, "wiki");
}

// A record as the collection client writes it: machine label, generator id
// and nested provenance under meta.
TEST(Ingest, AcceptsCollectorRecords) {
  const std::string line = R"({"id":"h1:gpt-x","text":"The first twenty tokens continue here.",)"
                           R"("label":"machine","generator_id":"gpt-x","domain":"news",)"
                           R"("meta":{"source_id":"h1","backend":"http","timestamp":"2024-05-01T12:00:00Z",)"
                           R"("request":{"top_p":0.96,"max_tokens":120,"seed":7}}})";
  const Corpus c = parse_jsonl(line + "\n", "news");
  ASSERT_EQ(c.samples.size(), 1u);
  EXPECT_EQ(source_id(c.samples[0]), "h1");
  EXPECT_DOUBLE_EQ(c.samples[0].meta["request"]["top_p"].get<double>(), 0.96);
}

TEST(Ingest, RoundTrip) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TextSample> samples;
    const std::size_t n = 1 + gen() % 30;
    for (std::size_t i = 0; i < n; ++i) {
      auto text = testing::random_text(gen, 1 + gen() % 20, "ab\"\\ z") + " \xc3\xa9t\xc3\xa9";
      if (gen() % 2) {
        samples.push_back(human("h" + std::to_string(i), text));
      } else {
        auto m = machine("m" + std::to_string(i), text, "g" + std::to_string(gen() % 3));
        m.meta = {{"source_id", "h" + std::to_string(i)}, {"n", static_cast<int>(i)}};
        samples.push_back(m);
      }
    }
    TempDir dir("roundtrip");
    write_jsonl(dir / "c.jsonl", samples);
    const Corpus back = ingest_jsonl(dir / "c.jsonl", "news");
    EXPECT_EQ(back.samples, samples);
  }
}

TEST(Split, FiveThousandEightOneOne) {
  EXPECT_EQ(split_sizes(5000, {8, 1, 1}), (std::array<std::size_t, 3>{4000, 500, 500}));
  EXPECT_EQ(split_sizes(10, {8, 1, 1}), (std::array<std::size_t, 3>{8, 1, 1}));
  EXPECT_EQ(split_sizes(11, {8, 1, 1}), (std::array<std::size_t, 3>{9, 1, 1}));
}

// Hand enumeration for 1..20 under 8:1:1 with the remainder on train.
TEST(Split, RemainderRuleEnumeration) {
  for (std::size_t n = 1; n <= 20; ++n) {
    std::array<std::size_t, 3> expected;
    if (n < 10) {
      expected = {n, 0, 0};
    } else if (n < 20) {
      expected = {n - 2, 1, 1};
    } else {
      expected = {16, 2, 2};
    }
    EXPECT_EQ(split_sizes(n, {8, 1, 1}), expected) << "n=" << n;
  }
}

TEST(Split, DisjointExhaustiveReproducible) {
  const Corpus c = testing::human_corpus(137);
  const SplitSpec spec{{8, 1, 1}, 42};
  const CorpusSplit a = split(c, spec);
  const CorpusSplit b = split(c, spec);
  EXPECT_EQ(to_jsonl(a.train.samples) + to_jsonl(a.dev.samples) + to_jsonl(a.test.samples),
            to_jsonl(b.train.samples) + to_jsonl(b.dev.samples) + to_jsonl(b.test.samples));
  std::multiset<std::string> ids;
  for (Partition p : {Partition::kTrain, Partition::kDev, Partition::kTest}) {
    for (const auto& s : a[p].samples) ids.insert(s.id);
  }
  std::multiset<std::string> original;
  for (const auto& s : c.samples) original.insert(s.id);
  EXPECT_EQ(ids, original);
  EXPECT_EQ(a.train.samples.size(), 111u);
  EXPECT_EQ(a.dev.samples.size(), 13u);
  EXPECT_EQ(a.test.samples.size(), 13u);

  const CorpusSplit other = split(c, SplitSpec{{8, 1, 1}, 43});
  EXPECT_NE(to_jsonl(other.test.samples), to_jsonl(a.test.samples));
}

TEST(Split, ManifestRoundTripAndApply) {
  const Corpus h = testing::human_corpus(50);
  const SplitSpec spec{{8, 1, 1}, 5};
  const CorpusSplit parts = split(h, spec);
  const SplitManifest m = manifest_from_json(to_json(make_manifest(parts, spec)));
  EXPECT_EQ(m.assignments.size(), 50u);

  Corpus machine_side;
  machine_side.domain = "news";
  for (const auto& s : h.samples) {
    auto ms = machine(s.id + ":g", "machine text", "g");
    ms.meta = {{"source_id", s.id}};
    machine_side.samples.push_back(ms);
  }
  const CorpusSplit mapped = apply_manifest(machine_side, m);
  for (Partition p : {Partition::kTrain, Partition::kDev, Partition::kTest}) {
    ASSERT_EQ(mapped[p].samples.size(), parts[p].samples.size());
    for (const auto& s : mapped[p].samples) EXPECT_EQ(m.assignments.at(source_id(s)), p);
  }
}

TEST(Pair, EqualSides) {
  const auto out = pair(testing::human_corpus(500), testing::machine_corpus(500, "g"), "g", 1);
  EXPECT_EQ(out.size(), 1000u);
  EXPECT_EQ(std::count_if(out.begin(), out.end(), [](auto& s) { return s.label == Label::kHuman; }),
            500);
}

TEST(Pair, SubsamplesLargerSide) {
  const auto out = pair(testing::human_corpus(500), testing::machine_corpus(600, "g"), "g", 1);
  EXPECT_EQ(out.size(), 1000u);
  EXPECT_EQ(std::count_if(out.begin(), out.end(), [](auto& s) { return s.label == Label::kMachine; }),
            500);
  std::set<std::string> ids;
  for (const auto& s : out) ids.insert(s.id);
  EXPECT_EQ(ids.size(), 1000u);
}

TEST(Pair, DeterministicUnderSeed) {
  const auto h = testing::human_corpus(40);
  const auto m = testing::machine_corpus(55, "g");
  EXPECT_EQ(pair(h, m, "g", 99), pair(h, m, "g", 99));
  EXPECT_NE(pair(h, m, "g", 99), pair(h, m, "g", 100));
}

TEST(Pair, EveryPartitionBalanced) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto h = testing::human_corpus(10 + gen() % 200);
    const auto m = testing::machine_corpus(10 + gen() % 200, "g");
    const auto hs = split(h, {{8, 1, 1}, gen()});
    const auto ms = split(m, {{8, 1, 1}, gen()});
    const PairedDataset ds = pair_splits(hs, ms, "g", gen());
    for (const auto* part : {&ds.train, &ds.dev, &ds.test}) {
      const auto humans =
          std::count_if(part->begin(), part->end(), [](auto& s) { return s.label == Label::kHuman; });
      EXPECT_EQ(static_cast<std::size_t>(humans) * 2, part->size());
    }
  }
}

TEST(Pair, RejectsWrongGenerator) {
  EXPECT_EQ(code_of([] { pair(testing::human_corpus(3), testing::machine_corpus(3, "g"), "h", 1); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { pair(Corpus{}, testing::machine_corpus(3, "g"), "g", 1); }),
            ErrorCode::kEmptyCorpus);
}

}  // namespace
}  // namespace xgen
