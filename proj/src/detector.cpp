#include "xgen/detector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "xgen/error.hpp"
#include "xgen/util.hpp"

namespace xgen {

namespace {

constexpr std::uint64_t kCharSalt = 0x63686172ULL;  // "char"
constexpr std::uint64_t kWordSalt = 0x776f7264ULL;  // "word"

// Byte offsets of code point starts, plus the end offset.
std::vector<std::size_t> code_point_bounds(std::string_view s) {
  std::vector<std::size_t> bounds;
  bounds.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) bounds.push_back(i);
  }
  bounds.push_back(s.size());
  return bounds;
}

double bce(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

double squared_norm(std::span<const double> w) {
  double s = 0.0;
  for (double x : w) s += x * x;
  return s;
}

}  // namespace

void FeaturizerConfig::validate() const {
  if (char_ngram_lo < 1 || char_ngram_lo > char_ngram_hi || word_ngram_lo < 1 ||
      word_ngram_lo > word_ngram_hi) {
    throw Error(ErrorCode::kInvalidConfig, "n-gram ranges must satisfy 1 <= lo <= hi");
  }
  if (hash_dims < (1u << 10) || !std::has_single_bit(hash_dims)) {
    throw Error(ErrorCode::kInvalidConfig, "hash_dims must be a power of two >= 1024");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidConfig, "learning_rate must be positive");
  }
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "Adam betas must lie in (0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw Error(ErrorCode::kInvalidConfig, "adam_epsilon must be > 0");
  if (batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  if (!(l2_penalty >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "l2_penalty must be >= 0");
}

double SparseVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) s += values[i] * dense[indices[i]];
  return s;
}

double SparseVector::norm() const {
  return std::sqrt(squared_norm(values));
}

DetectorModel DetectorModel::zeros(const FeaturizerConfig& cfg) {
  cfg.validate();
  DetectorModel m;
  m.featurizer = cfg;
  m.weights.assign(cfg.hash_dims, 0.0);
  return m;
}

void DetectorModel::validate() const {
  featurizer.validate();
  if (weights.size() != featurizer.hash_dims) {
    throw Error(ErrorCode::kInvalidArgument, "weight vector length != hash_dims");
  }
  if (!std::isfinite(bias) ||
      !std::all_of(weights.begin(), weights.end(), [](double w) { return std::isfinite(w); })) {
    throw Error(ErrorCode::kInvalidArgument, "model has non-finite parameters");
  }
}

SparseVector featurize(std::string_view text, const FeaturizerConfig& cfg) {
  cfg.validate();
  SparseVector out;
  const auto tokens = tokenize_ws(text);
  if (tokens.empty()) return out;

  std::vector<std::uint64_t> grams;
  for (int n = cfg.word_ngram_lo; n <= cfg.word_ngram_hi; ++n) {
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (std::size_t k = 1; k < un; ++k) {
        gram += ' ';
        gram += tokens[i + k];
      }
      grams.push_back(hash64(gram, kWordSalt + un));
    }
  }
  const std::string padded = " " + join_tokens(tokens, tokens.size()) + " ";
  const auto bounds = code_point_bounds(padded);
  const std::size_t n_chars = bounds.size() - 1;
  for (int n = cfg.char_ngram_lo; n <= cfg.char_ngram_hi; ++n) {
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + un <= n_chars; ++i) {
      std::string_view gram(padded.data() + bounds[i], bounds[i + un] - bounds[i]);
      grams.push_back(hash64(gram, kCharSalt + un));
    }
  }
  std::sort(grams.begin(), grams.end());

  // Weight each distinct n-gram, then fold into signed buckets.
  std::vector<std::pair<std::uint32_t, double>> cells;
  const std::uint64_t mask = cfg.hash_dims - 1;
  for (std::size_t i = 0; i < grams.size();) {
    std::size_t j = i;
    while (j < grams.size() && grams[j] == grams[i]) ++j;
    const double count = static_cast<double>(j - i);
    const double w = cfg.weighting == Weighting::kBinary ? 1.0 : std::log1p(count);
    const double sign = (grams[i] >> 63) ? -1.0 : 1.0;
    cells.emplace_back(static_cast<std::uint32_t>(grams[i] & mask), sign * w);
    i = j;
  }
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < cells.size();) {
    double v = 0.0;
    std::size_t j = i;
    for (; j < cells.size() && cells[j].first == cells[i].first; ++j) v += cells[j].second;
    if (v != 0.0) {
      out.indices.push_back(cells[i].first);
      out.values.push_back(v);
    }
    i = j;
  }
  if (cfg.l2_normalize) {
    const double norm = out.norm();
    if (norm > 0.0) {
      for (double& v : out.values) v /= norm;
    }
  }
  return out;
}

std::vector<LabeledVector> featurize_all(std::span<const TextSample> data,
                                         const FeaturizerConfig& cfg) {
  std::vector<LabeledVector> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    out.push_back({featurize(s.text, cfg), s.label == Label::kMachine ? 1.0 : 0.0});
  }
  return out;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossAndGradient loss_and_gradient(const DetectorModel& model,
                                  std::span<const LabeledVector> batch) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  const double lambda = model.train_config.l2_penalty;
  LossAndGradient out;
  out.grad_w.resize(model.weights.size());
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    out.grad_w[i] = 2.0 * lambda * model.weights[i];
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double data_loss = 0.0;
  for (const auto& ex : batch) {
    const double z = ex.x.dot(model.weights) + model.bias;
    data_loss += bce(z, ex.y);
    const double r = (sigmoid(z) - ex.y) * inv_n;
    for (std::size_t k = 0; k < ex.x.size(); ++k) out.grad_w[ex.x.indices[k]] += r * ex.x.values[k];
    out.grad_b += r;
  }
  out.loss = data_loss * inv_n + lambda * squared_norm(model.weights);
  return out;
}

namespace {

double full_objective(const DetectorModel& model, std::span<const LabeledVector> data) {
  double s = 0.0;
  for (const auto& ex : data) s += bce(ex.x.dot(model.weights) + model.bias, ex.y);
  return s / static_cast<double>(data.size()) +
         model.train_config.l2_penalty * squared_norm(model.weights);
}

}  // namespace

DetectorModel train(std::span<const TextSample> data, const FeaturizerConfig& fcfg,
                    const TrainConfig& tcfg, const EpochObserver& observer) {
  fcfg.validate();
  tcfg.validate();
  const bool has_human = std::any_of(data.begin(), data.end(),
                                     [](const auto& s) { return s.label == Label::kHuman; });
  const bool has_machine = std::any_of(data.begin(), data.end(),
                                       [](const auto& s) { return s.label == Label::kMachine; });
  if (!has_human || !has_machine) {
    throw Error(ErrorCode::kSingleClassData, "training data must contain both labels");
  }

  DetectorModel model = DetectorModel::zeros(fcfg);
  model.train_config = tcfg;
  for (const auto& s : data) {
    if (s.label == Label::kMachine &&
        std::find(model.trained_on.begin(), model.trained_on.end(), s.generator_id) ==
            model.trained_on.end()) {
      model.trained_on.push_back(s.generator_id);
    }
  }
  std::sort(model.trained_on.begin(), model.trained_on.end());

  const auto examples = featurize_all(data, fcfg);
  const std::size_t dims = fcfg.hash_dims;
  std::vector<double> grad(dims, 0.0), m1(dims, 0.0), m2(dims, 0.0);
  double bias_m1 = 0.0, bias_m2 = 0.0;

  // A coordinate that has never seen a feature has w = m1 = m2 = 0 and zero
  // gradient, so its Adam update is exactly zero; updates visit only the
  // coordinates touched so far.
  std::vector<std::uint8_t> is_active(dims, 0);
  std::vector<std::uint32_t> active;

  std::vector<std::size_t> order(examples.size());
  const double lambda = tcfg.l2_penalty;
  double beta1_pow = 1.0, beta2_pow = 1.0;
  double w_sq = 0.0;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(tcfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span(order));

    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
      const double inv_n = 1.0 / static_cast<double>(end - start);
      double batch_loss = 0.0;
      double grad_b = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = examples[order[i]];
        const double z = ex.x.dot(model.weights) + model.bias;
        batch_loss += bce(z, ex.y);
        const double r = (sigmoid(z) - ex.y) * inv_n;
        grad_b += r;
        for (std::size_t k = 0; k < ex.x.size(); ++k) {
          const auto idx = ex.x.indices[k];
          grad[idx] += r * ex.x.values[k];
          if (!is_active[idx]) {
            is_active[idx] = 1;
            active.push_back(idx);
          }
        }
      }
      batch_loss = batch_loss * inv_n + lambda * w_sq;
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "loss diverged in epoch " + std::to_string(epoch + 1) +
                        "; lower the learning rate");
      }

      beta1_pow *= tcfg.adam_beta1;
      beta2_pow *= tcfg.adam_beta2;
      const double c1 = 1.0 / (1.0 - beta1_pow);
      const double c2 = 1.0 / (1.0 - beta2_pow);
      auto adam = [&](double g, double& a, double& b) {
        a = tcfg.adam_beta1 * a + (1.0 - tcfg.adam_beta1) * g;
        b = tcfg.adam_beta2 * b + (1.0 - tcfg.adam_beta2) * g * g;
        return tcfg.learning_rate * (a * c1) / (std::sqrt(b * c2) + tcfg.adam_epsilon);
      };
      w_sq = 0.0;
      for (auto idx : active) {
        const double g = grad[idx] + 2.0 * lambda * model.weights[idx];
        grad[idx] = 0.0;
        model.weights[idx] -= adam(g, m1[idx], m2[idx]);
        w_sq += model.weights[idx] * model.weights[idx];
      }
      model.bias -= adam(grad_b, bias_m1, bias_m2);
    }

    const double loss = full_objective(model, examples);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "loss diverged after epoch " + std::to_string(epoch + 1) +
                      "; lower the learning rate");
    }
    if (observer) observer(epoch + 1, loss);
  }
  return model;
}

double predict_proba(const DetectorModel& model, const SparseVector& x) {
  return sigmoid(x.dot(model.weights) + model.bias);
}

double predict_proba(const DetectorModel& model, std::string_view text) {
  return predict_proba(model, featurize(text, model.featurizer));
}

Label label_for(double proba, double threshold) {
  return proba >= threshold ? Label::kMachine : Label::kHuman;
}

Label predict(const DetectorModel& model, std::string_view text, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1)");
  }
  return label_for(predict_proba(model, text), threshold);
}

nlohmann::json to_json(const FeaturizerConfig& cfg) {
  return {{"char_ngram_range", {cfg.char_ngram_lo, cfg.char_ngram_hi}},
          {"word_ngram_range", {cfg.word_ngram_lo, cfg.word_ngram_hi}},
          {"hash_dims", cfg.hash_dims},
          {"weighting", cfg.weighting == Weighting::kBinary ? "binary" : "log_tf"},
          {"l2_normalize", cfg.l2_normalize}};
}

FeaturizerConfig featurizer_from_json(const nlohmann::json& j) {
  FeaturizerConfig cfg;
  try {
    if (j.contains("char_ngram_range")) {
      cfg.char_ngram_lo = j["char_ngram_range"].at(0).get<int>();
      cfg.char_ngram_hi = j["char_ngram_range"].at(1).get<int>();
    }
    if (j.contains("word_ngram_range")) {
      cfg.word_ngram_lo = j["word_ngram_range"].at(0).get<int>();
      cfg.word_ngram_hi = j["word_ngram_range"].at(1).get<int>();
    }
    cfg.hash_dims = j.value("hash_dims", cfg.hash_dims);
    const std::string weighting = j.value("weighting", std::string("log_tf"));
    if (weighting == "binary") {
      cfg.weighting = Weighting::kBinary;
    } else if (weighting == "log_tf") {
      cfg.weighting = Weighting::kLogTf;
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown weighting \"" + weighting + "\"");
    }
    cfg.l2_normalize = j.value("l2_normalize", cfg.l2_normalize);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad featurizer config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"adam_beta1", cfg.adam_beta1},
          {"adam_beta2", cfg.adam_beta2},
          {"adam_epsilon", cfg.adam_epsilon},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"l2_penalty", cfg.l2_penalty}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  try {
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_epsilon = j.value("adam_epsilon", cfg.adam_epsilon);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.l2_penalty = j.value("l2_penalty", cfg.l2_penalty);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void save_model(const DetectorModel& model, const std::filesystem::path& json_path) {
  static_assert(std::endian::native == std::endian::little,
                "weight sidecars are written in native little-endian order");
  model.validate();
  std::string blob(model.weights.size() * sizeof(double), '\0');
  std::memcpy(blob.data(), model.weights.data(), blob.size());
  auto weights_path = json_path;
  weights_path.replace_extension(".weights");
  write_file(weights_path, blob);

  nlohmann::json j = {{"featurizer", to_json(model.featurizer)},
                      {"train_config", to_json(model.train_config)},
                      {"trained_on", model.trained_on},
                      {"bias", model.bias},
                      {"label_convention", "P(machine)"},
                      {"weights_file", weights_path.filename().string()},
                      {"weights_digest", sha256_hex(blob)}};
  write_file(json_path, j.dump(2) + "\n");
}

DetectorModel load_model(const std::filesystem::path& json_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(json_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "model file " + json_path.string() + " is not JSON: " + e.what());
  }
  DetectorModel model;
  std::string weights_file, digest;
  try {
    model.featurizer = featurizer_from_json(j.at("featurizer"));
    model.train_config = train_config_from_json(j.at("train_config"));
    model.trained_on = j.at("trained_on").get<std::vector<std::string>>();
    model.bias = j.at("bias").get<double>();
    weights_file = j.at("weights_file").get<std::string>();
    digest = j.at("weights_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "model file " + json_path.string() + ": " + e.what());
  }
  const std::string blob = read_file(json_path.parent_path() / weights_file);
  if (sha256_hex(blob) != digest) {
    throw Error(ErrorCode::kDigestMismatch, "weights digest mismatch for " + json_path.string());
  }
  if (blob.size() != std::size_t(model.featurizer.hash_dims) * sizeof(double)) {
    throw Error(ErrorCode::kInvalidArgument, "weights file size does not match hash_dims");
  }
  model.weights.resize(model.featurizer.hash_dims);
  std::memcpy(model.weights.data(), blob.data(), blob.size());
  model.validate();
  return model;
}

}  // namespace xgen
