#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <json.hpp>

#include "lenbias/analysis.hpp"
#include "lenbias/corpus.hpp"

namespace lenbias {

/// Row-per-document sparse design matrix. Column 0 is the standardised
/// token count; columns 1..hash_dim are length-normalised hashed unigram
/// counts.
using FeatureMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct FeatureConfig {
  bool length = true;
  bool bag = true;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

FeatureConfig parse_feature_config(std::string_view text);  // "length,bag" etc.
std::string to_string(const FeatureConfig& config);

struct TrainHyper {
  std::size_t epochs = 20;
  double learning_rate = 1.0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::size_t hash_dim = std::size_t{1} << 18;
  /// L2 penalty (l2 / 2) * ||w||^2 on the feature weights; the bias is not
  /// penalised.
  double l2 = 0.0;
  /// Total mass of a document's bag features.
  double bag_scale = 10.0;
};

/// Length feature: (len - mean) / stdev, clamped to [-clip, clip] so lengths
/// far outside the training range do not extrapolate.
struct LengthNormalization {
  double mean = 0.0;
  double stdev = 1.0;
  double clip = 3.0;
};

/// Hashed-feature column of a token: FNV-1a 64 of its UTF-8 bytes modulo
/// `hash_dim`, offset past the length column.
std::size_t hashed_column(std::string_view token, std::size_t hash_dim);

/// Builds the design matrix. Column 0 is the clamped standardised length. Bag
/// features are token frequencies times `bag_scale` (count * bag_scale / m),
/// so the bag block has the same total mass for every document and carries
/// no length information.
FeatureMatrix featurize(const Corpus& corpus, const FeatureConfig& config, std::size_t hash_dim,
                        const LengthNormalization& norm, double bag_scale);

/// Logistic model over the features above; score > 0 predicts
/// `positive_label`.
struct LinearModel {
  FeatureConfig features;
  std::size_t hash_dim = 1;
  LengthNormalization normalization;
  Eigen::VectorXd weights;  // size hash_dim + 1
  double bias = 0.0;
  Label negative_label = 0;
  Label positive_label = 1;
  TrainHyper hyper;

  double length_weight() const { return weights.size() > 0 ? weights[0] : 0.0; }
};

struct Prediction {
  std::string doc_id;
  Label predicted_label = 0;
  double score = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

inline double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

inline double softplus(double s) { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); }

/// Mean logistic loss plus the L2 term:
/// mean_i [softplus(s_i) - y_i * s_i] + (l2 / 2) ||w||^2, s = X w + bias,
/// y in {0, 1}.
template <typename WeightsDerived, typename TargetDerived>
double logistic_loss(const FeatureMatrix& X, const Eigen::MatrixBase<WeightsDerived>& w, double bias,
                     const Eigen::MatrixBase<TargetDerived>& y, double l2 = 0.0) {
  const Eigen::VectorXd s = (X * w).array() + bias;
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += softplus(s[i]) - y[i] * s[i];
  return total / static_cast<double>(s.size()) + 0.5 * l2 * w.squaredNorm();
}

struct LogisticGradient {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

/// Analytic gradient of `logistic_loss`: X^T (sigmoid(s) - y) / n + l2 w.
template <typename WeightsDerived, typename TargetDerived>
LogisticGradient logistic_gradient(const FeatureMatrix& X, const Eigen::MatrixBase<WeightsDerived>& w,
                                   double bias, const Eigen::MatrixBase<TargetDerived>& y, double l2 = 0.0) {
  const Eigen::VectorXd s = (X * w).array() + bias;
  Eigen::VectorXd residual(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) residual[i] = sigmoid(s[i]) - y[i];
  const double n = static_cast<double>(s.size());
  return {X.transpose() * residual / n + l2 * w, residual.sum() / n};
}

/// Weights stored as scale * direction, so the L2 shrink of a step is one
/// multiplication instead of a pass over every hashed column.
class ScaledWeights {
 public:
  explicit ScaledWeights(Eigen::Index size) : direction_(Eigen::VectorXd::Zero(size)) {}

  double operator[](Eigen::Index i) const { return scale_ * direction_[i]; }
  void add(Eigen::Index i, double delta) { direction_[i] += delta / scale_; }
  void shrink(double factor);
  Eigen::VectorXd materialize() const { return scale_ * direction_; }

 private:
  Eigen::VectorXd direction_;
  double scale_ = 1.0;
};

/// One mini-batch step over `rows`: w <- (1 - lr * l2) w - lr * (batch mean
/// logistic gradient), evaluated at the pre-step weights. Matches
/// lr * logistic_gradient(batch rows, l2) exactly; touches only the batch's
/// non-zero columns.
void minibatch_step(const FeatureMatrix& X, const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows,
                    double learning_rate, double l2, ScaledWeights& w, double& bias);

/// Deterministic mini-batch gradient descent on the mean logistic loss,
/// starting from zero weights. Each epoch visits the documents in a fresh
/// permutation seeded from (hyper.seed, epoch).
LinearModel train_linear(const Corpus& corpus, const FeatureConfig& config, const TrainHyper& hyper);

std::vector<Prediction> predict(const LinearModel& model, const Corpus& corpus);

/// The length-only rule: len <= threshold -> short class. Score is
/// threshold + 0.5 - len, positive on the short side.
std::vector<Prediction> length_threshold_predict(const SplitPoint& split, const Corpus& corpus);

nlohmann::ordered_json to_json(const LinearModel& model);
LinearModel linear_model_from_json(const nlohmann::json& j);

std::string predictions_csv(const std::vector<Prediction>& predictions);
std::vector<Prediction> parse_predictions_csv(std::string_view text);

}  // namespace lenbias
