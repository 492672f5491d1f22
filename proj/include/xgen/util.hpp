#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xgen {

// splitmix64 finalizer; also used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept;

// Stable 64-bit string hash (FNV-1a followed by mix64). Used for feature
// hashing and seed derivation, so its values must never change.
std::uint64_t hash64(std::string_view bytes, std::uint64_t salt = 0) noexcept;

// Seeded random stream. Only the raw mt19937_64 output is consumed, so the
// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, so readers never see a
// partially written file.
void write_file(const std::filesystem::path& path, std::string_view content);

// Fixed-point rendering; negative zero renders without a sign.
std::string format_fixed(double value, int decimals);

// RFC 4180 field quoting: fields with commas, quotes or line breaks are
// wrapped in double quotes with embedded quotes doubled.
std::string csv_field(std::string_view field);

}  // namespace xgen
