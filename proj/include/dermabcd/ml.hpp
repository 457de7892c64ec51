#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dermabcd/error.hpp"
#include "dermabcd/random.hpp"
#include "dermabcd/scoring.hpp"

namespace dermabcd {

inline constexpr std::size_t kFeatureDims = 5;

/// (A, B, C, D, TDS)
using FeatureVector = std::array<double, kFeatureDims>;

inline FeatureVector to_feature_vector(int a, int b, int c, int d, double tds) {
  return {double(a), double(b), double(c), double(d), tds};
}

// ---------------------------------------------------------------------------
// Splitting

/// Per-class seeded shuffle, then the first round(fraction * class size)
/// members of each class go to training. Both outputs keep input order.
template <typename Record, typename LabelOf>
std::pair<std::vector<Record>, std::vector<Record>> stratified_split(std::span<const Record> records,
                                                                     double train_fraction,
                                                                     std::uint64_t seed, LabelOf label_of) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
  }
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_class[label_of(records[i]) == BinaryLabel::Malignant ? 1 : 0].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) {
    throw EvaluationError("stratified split needs at least one record of each class");
  }
  Rng rng(seed);
  std::vector<std::uint8_t> in_train(records.size(), 0);
  for (auto& members : by_class) {
    rng.shuffle(members);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < n_train && j < members.size(); ++j) in_train[members[j]] = 1;
  }
  std::pair<std::vector<Record>, std::vector<Record>> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (in_train[i] ? out.first : out.second).push_back(records[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

struct Normalizer {
  FeatureVector means{};
  FeatureVector stds{};

  FeatureVector apply(const FeatureVector& x) const {
    FeatureVector out{};
    for (std::size_t j = 0; j < kFeatureDims; ++j) out[j] = stds[j] == 0.0 ? 0.0 : (x[j] - means[j]) / stds[j];
    return out;
  }

  std::vector<FeatureVector> apply(std::span<const FeatureVector> xs) const {
    std::vector<FeatureVector> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(apply(x));
    return out;
  }
};

/// Per-dimension mean and population standard deviation.
inline Normalizer fit_normalizer(std::span<const FeatureVector> train) {
  if (train.empty()) throw EvaluationError("cannot fit a normalizer on an empty training set");
  Normalizer n;
  const double count = static_cast<double>(train.size());
  for (std::size_t j = 0; j < kFeatureDims; ++j) {
    double s = 0.0;
    for (const auto& x : train) s += x[j];
    const double mean = s / count;
    double ss = 0.0;
    for (const auto& x : train) ss += (x[j] - mean) * (x[j] - mean);
    n.means[j] = mean;
    n.stds[j] = std::sqrt(ss / count);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Logistic regression

struct ClassWeights {
  double benign = 1.0;
  double malignant = 1.0;

  double of(BinaryLabel l) const { return l == BinaryLabel::Malignant ? malignant : benign; }
};

/// Inverse-frequency weights w_c = N / (2 N_c).
inline ClassWeights class_weights(std::span<const BinaryLabel> labels) {
  std::size_t pos = 0;
  for (auto l : labels) pos += l == BinaryLabel::Malignant ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw EvaluationError("class weights need both classes present");
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(neg)), n / (2.0 * static_cast<double>(pos))};
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  std::uint64_t seed = 0;
};

struct LogisticModel {
  FeatureVector weights{};
  double bias = 0.0;
  TrainConfig config;

  double decision(const FeatureVector& x) const {
    double z = bias;
    for (std::size_t j = 0; j < kFeatureDims; ++j) z += weights[j] * x[j];
    return z;
  }
};

inline double predict_proba(const LogisticModel& m, const FeatureVector& x) { return sigmoid(m.decision(x)); }

inline std::vector<double> predict_proba(const LogisticModel& m, std::span<const FeatureVector> xs) {
  std::vector<double> p;
  p.reserve(xs.size());
  for (const auto& x : xs) p.push_back(predict_proba(m, x));
  return p;
}

inline BinaryLabel predict_label(const LogisticModel& m, const FeatureVector& x) {
  return predict_proba(m, x) >= 0.5 ? BinaryLabel::Malignant : BinaryLabel::Benign;
}

struct TrainingSet {
  std::span<const FeatureVector> features;
  std::span<const BinaryLabel> labels;
  std::span<const double> sample_weights;
};

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Class-weighted mean binary cross-entropy.
inline double logistic_loss(const LogisticModel& m, const TrainingSet& data) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.features.size(); ++i) {
    const double z = m.decision(data.features[i]);
    // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
    const double l = data.labels[i] == BinaryLabel::Malignant ? softplus(-z) : softplus(z);
    loss += data.sample_weights[i] * l;
  }
  return loss / static_cast<double>(data.features.size());
}

struct Gradient {
  FeatureVector weights{};
  double bias = 0.0;
};

inline Gradient logistic_gradient(const LogisticModel& m, const TrainingSet& data) {
  Gradient g;
  const double n = static_cast<double>(data.features.size());
  for (std::size_t i = 0; i < data.features.size(); ++i) {
    const double y = data.labels[i] == BinaryLabel::Malignant ? 1.0 : 0.0;
    const double r = data.sample_weights[i] * (predict_proba(m, data.features[i]) - y) / n;
    for (std::size_t j = 0; j < kFeatureDims; ++j) g.weights[j] += r * data.features[i][j];
    g.bias += r;
  }
  return g;
}

struct TrainingResult {
  LogisticModel model;
  std::vector<double> loss_history;  // loss before each update, then the final loss
};

/// Full-batch gradient descent from zero parameters.
inline TrainingResult train_logistic(const TrainingSet& data, const TrainConfig& config) {
  if (data.features.size() != data.labels.size() || data.features.size() != data.sample_weights.size()) {
    throw std::invalid_argument("train_logistic: features, labels and weights differ in length");
  }
  std::size_t pos = 0;
  for (auto l : data.labels) pos += l == BinaryLabel::Malignant ? 1 : 0;
  if (data.features.size() < 2 || pos == 0 || pos == data.labels.size()) {
    throw EvaluationError("train_logistic needs at least two examples spanning both classes");
  }
  TrainingResult res;
  res.model.config = config;
  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    const double loss = logistic_loss(res.model, data);
    if (!std::isfinite(loss)) {
      throw EvaluationError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
    }
    res.loss_history.push_back(loss);
    if (epoch == config.epochs) break;
    const Gradient g = logistic_gradient(res.model, data);
    for (std::size_t j = 0; j < kFeatureDims; ++j) res.model.weights[j] -= config.learning_rate * g.weights[j];
    res.model.bias -= config.learning_rate * g.bias;
    bool finite = std::isfinite(res.model.bias);
    for (double w : res.model.weights) finite = finite && std::isfinite(w);
    if (!finite) {
      throw EvaluationError("training diverged: non-finite parameters at epoch " + std::to_string(epoch + 1));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Metrics

struct MetricsReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // absent when only one class is present

  std::size_t total() const { return tp + fp + fn + tn; }
  double specificity() const { return (tn + fp) == 0 ? 0.0 : double(tn) / double(tn + fp); }
};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from mid-ranks in O(n log n).
inline double pairwise_auc(std::span<const BinaryLabel> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("pairwise_auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (2 * rank) over positives, ranks 1-based with ties averaged.
  double rank_sum2 = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double twice_mid_rank = static_cast<double>(i + 1 + j);  // 2 * (i+1 + j) / 2
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == BinaryLabel::Malignant) {
        rank_sum2 += twice_mid_rank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw EvaluationError("AUC is undefined with a single class");
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  const double u = rank_sum2 / 2.0 - p * (p + 1.0) / 2.0;
  return u / (p * n);
}

inline MetricsReport compute_metrics(std::span<const BinaryLabel> labels, std::span<const BinaryLabel> predictions,
                                     std::span<const double> scores) {
  if (labels.size() != predictions.size() || labels.size() != scores.size()) {
    throw std::invalid_argument("compute_metrics: inputs differ in length");
  }
  MetricsReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool y = labels[i] == BinaryLabel::Malignant;
    const bool p = predictions[i] == BinaryLabel::Malignant;
    if (y && p) ++r.tp;
    else if (!y && p) ++r.fp;
    else if (y && !p) ++r.fn;
    else ++r.tn;
  }
  const double n = static_cast<double>(labels.size());
  r.accuracy = labels.empty() ? 0.0 : static_cast<double>(r.tp + r.tn) / n;
  r.precision = (r.tp + r.fp) == 0 ? 0.0 : double(r.tp) / double(r.tp + r.fp);
  r.recall = (r.tp + r.fn) == 0 ? 0.0 : double(r.tp) / double(r.tp + r.fn);
  r.f1 = (r.precision + r.recall) == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  const bool both = r.tp + r.fn > 0 && r.fp + r.tn > 0;
  if (both) r.auc = pairwise_auc(labels, scores);
  return r;
}

// ---------------------------------------------------------------------------
// Evaluation harness

/// One successfully extracted image.
struct FeatureRow {
  std::string image_id;
  int a = 0, b = 0, c = 1, d = 0;
  double tds = 0.0;
  TdsCategory category = TdsCategory::Benign;
  BinaryLabel label = BinaryLabel::Benign;

  FeatureVector vector() const { return to_feature_vector(a, b, c, d, tds); }
};

struct EvaluationConfig {
  double train_fraction = 0.8;
  TrainConfig training;
};

struct MethodReport {
  std::string method;
  MetricsReport metrics;
};

struct EvaluationReport {
  std::vector<MethodReport> methods;  // "tds_rule", then "logistic_regression"
  LogisticModel model;
  Normalizer normalizer;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t excluded_count = 0;
};

/// Splits the rows, evaluates the TDS rule and a class-weighted logistic
/// regression on the same held-out rows.
inline EvaluationReport evaluate_rule_and_model(std::span<const FeatureRow> rows, std::uint64_t seed,
                                                const EvaluationConfig& config = {},
                                                std::size_t excluded_count = 0) {
  auto [train, test] = stratified_split<FeatureRow>(rows, config.train_fraction, seed,
                                                    [](const FeatureRow& r) { return r.label; });
  if (test.empty()) throw EvaluationError("test split is empty");
  if (train.empty()) throw EvaluationError("training split is empty");

  EvaluationReport report;
  report.train_count = train.size();
  report.test_count = test.size();
  report.excluded_count = excluded_count;

  std::vector<BinaryLabel> test_labels;
  std::vector<BinaryLabel> rule_pred;
  std::vector<double> rule_scores;
  for (const auto& r : test) {
    test_labels.push_back(r.label);
    rule_pred.push_back(binary_from_assessment({r.tds, classify_tds(r.tds)}));
    rule_scores.push_back(r.tds);
  }
  report.methods.push_back({"tds_rule", compute_metrics(test_labels, rule_pred, rule_scores)});

  std::vector<FeatureVector> train_x;
  std::vector<BinaryLabel> train_y;
  for (const auto& r : train) {
    train_x.push_back(r.vector());
    train_y.push_back(r.label);
  }
  report.normalizer = fit_normalizer(train_x);
  const auto train_xn = report.normalizer.apply(train_x);
  const ClassWeights cw = class_weights(train_y);
  std::vector<double> sample_w;
  for (auto l : train_y) sample_w.push_back(cw.of(l));
  TrainConfig tc = config.training;
  tc.seed = seed;
  report.model = train_logistic({train_xn, train_y, sample_w}, tc).model;

  std::vector<double> probs;
  std::vector<BinaryLabel> model_pred;
  for (const auto& r : test) {
    const double p = predict_proba(report.model, report.normalizer.apply(r.vector()));
    probs.push_back(p);
    model_pred.push_back(p >= 0.5 ? BinaryLabel::Malignant : BinaryLabel::Benign);
  }
  report.methods.push_back({"logistic_regression", compute_metrics(test_labels, model_pred, probs)});
  return report;
}

}  // namespace dermabcd
