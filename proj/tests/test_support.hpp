#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "xgen/corpus.hpp"

namespace xgen::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("xgen_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline TextSample human(std::string id, std::string text, std::string domain = "news") {
  TextSample s;
  s.id = std::move(id);
  s.text = std::move(text);
  s.label = Label::kHuman;
  s.domain = std::move(domain);
  return s;
}

inline TextSample machine(std::string id, std::string text, std::string gen,
                          std::string domain = "news") {
  TextSample s = human(std::move(id), std::move(text), std::move(domain));
  s.label = Label::kMachine;
  s.generator_id = std::move(gen);
  return s;
}

// Space-joined words "w0 w1 ... w{n-1}" with an optional prefix per word.
inline std::string numbered_words(std::size_t n, const std::string& prefix = "w") {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + prefix + std::to_string(i);
  return out;
}

// Random lowercase words drawn from a small alphabet.
inline std::string random_text(std::mt19937_64& gen, std::size_t words,
                               const std::string& alphabet = "abcdefghij") {
  std::uniform_int_distribution<std::size_t> len(1, 8);
  std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
  std::string out;
  for (std::size_t w = 0; w < words; ++w) {
    if (w) out += ' ';
    const std::size_t n = len(gen);
    for (std::size_t i = 0; i < n; ++i) out += alphabet[ch(gen)];
  }
  return out;
}

inline Corpus human_corpus(std::size_t n, const std::string& prefix = "h",
                           std::size_t words = 30) {
  Corpus c;
  c.domain = "news";
  for (std::size_t i = 0; i < n; ++i) {
    c.samples.push_back(human(prefix + std::to_string(i), numbered_words(words, "t")));
  }
  return c;
}

inline Corpus machine_corpus(std::size_t n, const std::string& gen, const std::string& prefix = "m") {
  Corpus c;
  c.domain = "news";
  for (std::size_t i = 0; i < n; ++i) {
    c.samples.push_back(machine(prefix + std::to_string(i), numbered_words(30, "g"), gen));
  }
  return c;
}

}  // namespace xgen::testing
