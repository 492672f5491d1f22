#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xgen/corpus.hpp"
#include "xgen/detector.hpp"

namespace xgen {

// Row-major square matrix indexed by generator position.
template <typename T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, T fill = T{}) : n_(n), cells_(n * n, fill) {}

  std::size_t size() const { return n_; }
  T& operator()(std::size_t row, std::size_t col) { return cells_[row * n_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const { return cells_[row * n_ + col]; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> cells_;
};

using ModelSet = std::map<std::string, DetectorModel>;
using TestSets = std::map<std::string, std::vector<TextSample>>;

// acc(M, N) = Acc_N(D_M): detector M (row) on generator N's test set (column).
struct AccMatrix {
  std::vector<std::string> generators;
  SquareMatrix<double> acc;
  std::vector<std::size_t> test_sizes;

  std::size_t index_of(std::string_view generator) const;
  double at(std::string_view detector, std::string_view generator) const;
};

struct AccGapMatrix {
  std::vector<std::string> generators;
  AccMatrix acc;
  // gap(M, N) = acc(N, N) - acc(M, N) on the full test set.
  SquareMatrix<double> gap;
  // Mean over bootstrap resamples; equals gap when no resampling was done.
  SquareMatrix<double> mean_gap;
  SquareMatrix<double> p_values;
  SquareMatrix<std::uint8_t> significant;
  std::size_t resamples = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;

  std::size_t index_of(std::string_view generator) const { return acc.index_of(generator); }
};

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool significant = false;
};

struct BootstrapResult {
  std::vector<double> resample_accs_a;
  std::vector<double> resample_accs_b;
  double mean_gap = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
  std::uint64_t seed = 0;
};

// Per-sample correctness of model predictions against gold labels.
std::vector<std::uint8_t> correctness(const DetectorModel& model,
                                      std::span<const TextSample> testset);

double accuracy(const DetectorModel& model, std::span<const TextSample> testset);

// Generator order defaults to sorted keys when `order` is empty.
AccMatrix acc_matrix(const ModelSet& models, const TestSets& testsets,
                     std::span<const std::string> order = {});

double acc_gap(const AccMatrix& matrix, std::string_view detector, std::string_view generator);

// Index lists for k resamples of a size-n set; resample i depends only on
// (seed, i).
std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, std::size_t k,
                                                        std::uint64_t seed);
std::vector<std::vector<TextSample>> bootstrap_testsets(std::span<const TextSample> testset,
                                                        std::size_t k, std::uint64_t seed);

// Paired one-sided test of H1: mean(a) > mean(b), t distribution with k-1
// degrees of freedom. A zero-variance difference vector yields t = +inf,
// p = 0 when its mean is positive and p = 1 otherwise.
TTestResult one_sided_t_test(std::span<const double> accs_a, std::span<const double> accs_b,
                             double alpha = 0.05);

// Upper tail P(T > t) of Student's t with `dof` degrees of freedom.
double student_t_upper_tail(double t, double dof);

// Paired bootstrap of two detectors over the same resamples. `correct_a`
// and `correct_b` are per-sample correctness on one test set.
BootstrapResult paired_bootstrap(std::span<const std::uint8_t> correct_a,
                                 std::span<const std::uint8_t> correct_b, std::size_t k,
                                 std::uint64_t seed, double alpha = 0.05);

AccGapMatrix gap_matrix_with_significance(const ModelSet& models, const TestSets& testsets,
                                          std::span<const std::string> order = {},
                                          std::size_t k = 100, double alpha = 0.05,
                                          std::uint64_t seed = 0);

// Gap matrix from known accuracies with no resampling: mean_gap == gap,
// p = 1 and nothing significant.
AccGapMatrix gap_matrix_from_acc(const AccMatrix& acc);

nlohmann::json to_json(const AccGapMatrix& m);
AccGapMatrix gap_matrix_from_json(const nlohmann::json& j);
std::string digest(const AccGapMatrix& m);

}  // namespace xgen
