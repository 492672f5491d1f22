#include "xgen/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {

namespace {

std::vector<std::string> resolve_order(const ModelSet& models, const TestSets& testsets,
                                       std::span<const std::string> order) {
  std::set<std::string> model_keys, test_keys;
  for (const auto& [k, _] : models) model_keys.insert(k);
  for (const auto& [k, _] : testsets) test_keys.insert(k);
  if (model_keys != test_keys) {
    std::vector<std::string> diff;
    std::set_symmetric_difference(model_keys.begin(), model_keys.end(), test_keys.begin(),
                                  test_keys.end(), std::back_inserter(diff));
    std::string msg = "model and test-set generators differ:";
    for (const auto& d : diff) msg += " " + d;
    throw Error(ErrorCode::kKeyMismatch, msg);
  }
  if (order.empty()) return {model_keys.begin(), model_keys.end()};
  std::set<std::string> order_keys(order.begin(), order.end());
  if (order_keys != model_keys || order_keys.size() != order.size()) {
    throw Error(ErrorCode::kKeyMismatch, "generator order does not list each generator once");
  }
  return {order.begin(), order.end()};
}

// correct[m][n]: per-sample correctness of detector m on test set n.
// Featurizations are shared between models with identical featurizers.
std::vector<std::vector<std::vector<std::uint8_t>>> correctness_table(
    const ModelSet& models, const TestSets& testsets, const std::vector<std::string>& gens) {
  const std::size_t g = gens.size();
  std::vector<std::vector<std::vector<std::uint8_t>>> table(
      g, std::vector<std::vector<std::uint8_t>>(g));
  for (std::size_t n = 0; n < g; ++n) {
    const auto& test = testsets.at(gens[n]);
    if (test.empty()) {
      throw Error(ErrorCode::kEmptyTestSet, "test set for \"" + gens[n] + "\" is empty");
    }
    std::vector<std::pair<FeaturizerConfig, std::vector<SparseVector>>> cache;
    for (std::size_t m = 0; m < g; ++m) {
      const auto& model = models.at(gens[m]);
      auto it = std::find_if(cache.begin(), cache.end(),
                             [&](const auto& e) { return e.first == model.featurizer; });
      if (it == cache.end()) {
        std::vector<SparseVector> xs;
        xs.reserve(test.size());
        for (const auto& s : test) xs.push_back(featurize(s.text, model.featurizer));
        cache.emplace_back(model.featurizer, std::move(xs));
        it = std::prev(cache.end());
      }
      auto& row = table[m][n];
      row.resize(test.size());
      for (std::size_t i = 0; i < test.size(); ++i) {
        row[i] = label_for(predict_proba(model, it->second[i])) == test[i].label;
      }
    }
  }
  return table;
}

double mean_of(std::span<const std::uint8_t> correct) {
  const auto hits = std::accumulate(correct.begin(), correct.end(), std::size_t{0});
  return static_cast<double>(hits) / static_cast<double>(correct.size());
}

nlohmann::json matrix_json(const SquareMatrix<double>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
SquareMatrix<T> matrix_from_json(const nlohmann::json& j, std::size_t n) {
  if (j.size() != n) throw Error(ErrorCode::kInvalidArgument, "matrix has wrong row count");
  SquareMatrix<T> m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (j.at(i).size() != n) throw Error(ErrorCode::kInvalidArgument, "matrix row has wrong size");
    for (std::size_t k = 0; k < n; ++k) m(i, k) = j.at(i).at(k).get<T>();
  }
  return m;
}

}  // namespace

std::size_t AccMatrix::index_of(std::string_view generator) const {
  auto it = std::find(generators.begin(), generators.end(), generator);
  if (it == generators.end()) {
    throw Error(ErrorCode::kUnknownGenerator, "unknown generator \"" + std::string(generator) + "\"");
  }
  return static_cast<std::size_t>(it - generators.begin());
}

double AccMatrix::at(std::string_view detector, std::string_view generator) const {
  return acc(index_of(detector), index_of(generator));
}

std::vector<std::uint8_t> correctness(const DetectorModel& model,
                                      std::span<const TextSample> testset) {
  std::vector<std::uint8_t> out;
  out.reserve(testset.size());
  for (const auto& s : testset) out.push_back(predict(model, s.text) == s.label);
  return out;
}

double accuracy(const DetectorModel& model, std::span<const TextSample> testset) {
  if (testset.empty()) throw Error(ErrorCode::kEmptyTestSet, "empty test set");
  return mean_of(correctness(model, testset));
}

AccMatrix acc_matrix(const ModelSet& models, const TestSets& testsets,
                     std::span<const std::string> order) {
  AccMatrix out;
  out.generators = resolve_order(models, testsets, order);
  const auto table = correctness_table(models, testsets, out.generators);
  const std::size_t g = out.generators.size();
  out.acc = SquareMatrix<double>(g);
  for (std::size_t m = 0; m < g; ++m) {
    for (std::size_t n = 0; n < g; ++n) out.acc(m, n) = mean_of(table[m][n]);
  }
  for (const auto& gen : out.generators) out.test_sizes.push_back(testsets.at(gen).size());
  return out;
}

double acc_gap(const AccMatrix& matrix, std::string_view detector, std::string_view generator) {
  const auto m = matrix.index_of(detector);
  const auto n = matrix.index_of(generator);
  return matrix.acc(n, n) - matrix.acc(m, n);
}

std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, std::size_t k,
                                                        std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kEmptyTestSet, "cannot bootstrap an empty test set");
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    out[i].resize(n);
    for (auto& idx : out[i]) idx = rng.index(n);
  }
  return out;
}

std::vector<std::vector<TextSample>> bootstrap_testsets(std::span<const TextSample> testset,
                                                        std::size_t k, std::uint64_t seed) {
  const auto indices = bootstrap_indices(testset.size(), k, seed);
  std::vector<std::vector<TextSample>> out;
  out.reserve(k);
  for (const auto& idx : indices) {
    auto& set = out.emplace_back();
    set.reserve(idx.size());
    for (auto i : idx) set.push_back(testset[i]);
  }
  return out;
}

double student_t_upper_tail(double t, double dof) {
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  boost::math::students_t_distribution<double> dist(dof);
  return boost::math::cdf(boost::math::complement(dist, t));
}

TTestResult one_sided_t_test(std::span<const double> accs_a, std::span<const double> accs_b,
                             double alpha) {
  if (accs_a.size() != accs_b.size()) {
    throw Error(ErrorCode::kLengthMismatch, "t-test inputs differ in length");
  }
  const std::size_t n = accs_a.size();
  if (n < 2) throw Error(ErrorCode::kTooFewSamples, "t-test needs at least 2 pairs");

  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = accs_a[i] - accs_b[i];
  TTestResult r;
  if (std::all_of(diff.begin(), diff.end(), [](double d) { return d == 0.0; })) return r;

  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / double(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double var = ss / double(n - 1);
  if (var == 0.0) {
    r.t = mean > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
    r.p = mean > 0 ? 0.0 : 1.0;
  } else {
    r.t = mean / std::sqrt(var / double(n));
    r.p = student_t_upper_tail(r.t, double(n - 1));
  }
  r.significant = r.p < alpha;
  return r;
}

BootstrapResult paired_bootstrap(std::span<const std::uint8_t> correct_a,
                                 std::span<const std::uint8_t> correct_b, std::size_t k,
                                 std::uint64_t seed, double alpha) {
  if (correct_a.size() != correct_b.size()) {
    throw Error(ErrorCode::kLengthMismatch, "paired bootstrap needs equal-length inputs");
  }
  BootstrapResult r;
  r.seed = seed;
  const auto indices = bootstrap_indices(correct_a.size(), k, seed);
  const double n = static_cast<double>(correct_a.size());
  double gap_sum = 0.0;
  for (const auto& idx : indices) {
    std::size_t hits_a = 0, hits_b = 0;
    for (auto i : idx) {
      hits_a += correct_a[i];
      hits_b += correct_b[i];
    }
    r.resample_accs_a.push_back(double(hits_a) / n);
    r.resample_accs_b.push_back(double(hits_b) / n);
    gap_sum += r.resample_accs_a.back() - r.resample_accs_b.back();
  }
  r.mean_gap = k ? gap_sum / double(k) : 0.0;
  const auto t = one_sided_t_test(r.resample_accs_a, r.resample_accs_b, alpha);
  r.t_statistic = t.t;
  r.p_value = t.p;
  r.significant = t.significant;
  return r;
}

AccGapMatrix gap_matrix_with_significance(const ModelSet& models, const TestSets& testsets,
                                          std::span<const std::string> order, std::size_t k,
                                          double alpha, std::uint64_t seed) {
  AccGapMatrix out;
  out.generators = resolve_order(models, testsets, order);
  const auto& gens = out.generators;
  const std::size_t g = gens.size();
  const auto table = correctness_table(models, testsets, gens);

  out.acc.generators = gens;
  out.acc.acc = SquareMatrix<double>(g);
  for (std::size_t m = 0; m < g; ++m) {
    for (std::size_t n = 0; n < g; ++n) out.acc.acc(m, n) = mean_of(table[m][n]);
  }
  for (const auto& gen : gens) out.acc.test_sizes.push_back(testsets.at(gen).size());

  out.gap = SquareMatrix<double>(g, 0.0);
  out.mean_gap = SquareMatrix<double>(g, 0.0);
  out.p_values = SquareMatrix<double>(g, 1.0);
  out.significant = SquareMatrix<std::uint8_t>(g, 0);
  out.resamples = k;
  out.alpha = alpha;
  out.seed = seed;
  for (std::size_t n = 0; n < g; ++n) {
    // Every detector is scored on the same virtual test sets of generator n.
    const std::uint64_t col_seed = derive_seed(seed, "bootstrap:" + gens[n]);
    for (std::size_t m = 0; m < g; ++m) {
      if (m == n) continue;
      out.gap(m, n) = out.acc.acc(n, n) - out.acc.acc(m, n);
      const auto boot = paired_bootstrap(table[n][n], table[m][n], k, col_seed, alpha);
      out.mean_gap(m, n) = boot.mean_gap;
      out.p_values(m, n) = boot.p_value;
      out.significant(m, n) = boot.significant;
    }
  }
  return out;
}

AccGapMatrix gap_matrix_from_acc(const AccMatrix& acc) {
  AccGapMatrix out;
  out.generators = acc.generators;
  out.acc = acc;
  const std::size_t g = acc.generators.size();
  out.gap = SquareMatrix<double>(g, 0.0);
  for (std::size_t m = 0; m < g; ++m) {
    for (std::size_t n = 0; n < g; ++n) {
      if (m != n) out.gap(m, n) = acc.acc(n, n) - acc.acc(m, n);
    }
  }
  out.mean_gap = out.gap;
  out.p_values = SquareMatrix<double>(g, 1.0);
  out.significant = SquareMatrix<std::uint8_t>(g, 0);
  return out;
}

nlohmann::json to_json(const AccGapMatrix& m) {
  nlohmann::json sig = nlohmann::json::array();
  for (std::size_t i = 0; i < m.generators.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.generators.size(); ++j) row.push_back(int(m.significant(i, j)));
    sig.push_back(std::move(row));
  }
  return {{"generators", m.generators},
          {"acc", matrix_json(m.acc.acc)},
          {"test_sizes", m.acc.test_sizes},
          {"gap", matrix_json(m.gap)},
          {"mean_gap", matrix_json(m.mean_gap)},
          {"p_values", matrix_json(m.p_values)},
          {"significant", std::move(sig)},
          {"resamples", m.resamples},
          {"alpha", m.alpha},
          {"seed", m.seed}};
}

AccGapMatrix gap_matrix_from_json(const nlohmann::json& j) {
  AccGapMatrix m;
  try {
    m.generators = j.at("generators").get<std::vector<std::string>>();
    const std::size_t g = m.generators.size();
    m.acc.generators = m.generators;
    m.acc.acc = matrix_from_json<double>(j.at("acc"), g);
    m.acc.test_sizes = j.at("test_sizes").get<std::vector<std::size_t>>();
    m.gap = matrix_from_json<double>(j.at("gap"), g);
    m.mean_gap = matrix_from_json<double>(j.at("mean_gap"), g);
    m.p_values = matrix_from_json<double>(j.at("p_values"), g);
    m.significant = matrix_from_json<std::uint8_t>(j.at("significant"), g);
    m.resamples = j.at("resamples").get<std::size_t>();
    m.alpha = j.at("alpha").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad matrix file: ") + e.what());
  }
  return m;
}

std::string digest(const AccGapMatrix& m) { return sha256_hex(to_json(m).dump()); }

}  // namespace xgen
