#include "lenbias/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lenbias/error.hpp"
#include "lenbias/io.hpp"
#include "lenbias/random.hpp"

namespace lenbias {

FeatureConfig parse_feature_config(std::string_view text) {
  FeatureConfig config{false, false};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(pos, comma - pos);
    if (item == "length") config.length = true;
    else if (item == "bag") config.bag = true;
    else if (!item.empty()) throw ConfigError("unknown feature '" + std::string(item) + "' (expected length, bag)");
    pos = comma + 1;
  }
  if (!config.length && !config.bag) throw ConfigError("at least one feature (length, bag) is required");
  return config;
}

std::string to_string(const FeatureConfig& config) {
  if (config.length && config.bag) return "length,bag";
  if (config.length) return "length";
  if (config.bag) return "bag";
  return "";
}

std::size_t hashed_column(std::string_view token, std::size_t hash_dim) {
  return 1 + static_cast<std::size_t>(fnv1a64(token) % hash_dim);
}

FeatureMatrix featurize(const Corpus& corpus, const FeatureConfig& config, std::size_t hash_dim,
                        const LengthNormalization& norm, double bag_scale) {
  using Triplet = Eigen::Triplet<double, Eigen::Index>;
  std::vector<Triplet> entries;
  Eigen::Index row = 0;
  for (const auto& doc : corpus.documents()) {
    if (config.length) {
      const double z = std::clamp((static_cast<double>(doc.token_count) - norm.mean) / norm.stdev, -norm.clip, norm.clip);
      if (z != 0.0) entries.emplace_back(row, 0, z);
    }
    if (config.bag) {
      const auto spans = token_spans(doc.text);
      if (!spans.empty()) {
        const double weight = bag_scale / static_cast<double>(spans.size());
        for (const auto& [begin, end] : spans) {
          const std::string_view token(doc.text.data() + begin, end - begin);
          entries.emplace_back(row, static_cast<Eigen::Index>(hashed_column(token, hash_dim)), weight);
        }
      }
    }
    ++row;
  }
  FeatureMatrix X(static_cast<Eigen::Index>(corpus.size()), static_cast<Eigen::Index>(hash_dim + 1));
  X.setFromTriplets(entries.begin(), entries.end());
  return X;
}

void ScaledWeights::shrink(double factor) {
  scale_ *= factor;
  // Fold the scale back in before it underflows.
  if (scale_ < 1e-9) {
    direction_ *= scale_;
    scale_ = 1.0;
  }
}

void minibatch_step(const FeatureMatrix& X, const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows,
                    double learning_rate, double l2, ScaledWeights& w, double& bias) {
  if (rows.empty()) return;
  std::vector<double> residual(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    double s = bias;
    for (FeatureMatrix::InnerIterator it(X, rows[k]); it; ++it) s += it.value() * w[it.col()];
    residual[k] = sigmoid(s) - y[rows[k]];
  }
  const double step = learning_rate / static_cast<double>(rows.size());
  if (l2 > 0.0) w.shrink(1.0 - learning_rate * l2);
  double bias_grad = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (FeatureMatrix::InnerIterator it(X, rows[k]); it; ++it) w.add(it.col(), -step * residual[k] * it.value());
    bias_grad += residual[k];
  }
  bias -= step * bias_grad;
}

LinearModel train_linear(const Corpus& corpus, const FeatureConfig& config, const TrainHyper& hyper) {
  if (corpus.labels().size() < 2) {
    throw TrainingError("training corpus has a single label; a two-class corpus is required");
  }
  const auto labels = corpus.require_two_classes();
  if (hyper.hash_dim == 0) throw ConfigError("hash_dim must be positive");
  if (hyper.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(hyper.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(hyper.l2 >= 0.0) || hyper.learning_rate * hyper.l2 >= 1.0)
    throw ConfigError("l2 must be non-negative with learning_rate * l2 < 1");
  if (!(hyper.bag_scale > 0.0)) throw ConfigError("bag_scale must be positive");
  if (!config.length && !config.bag) throw ConfigError("at least one feature (length, bag) is required");

  LinearModel model;
  model.features = config;
  model.hash_dim = hyper.hash_dim;
  model.negative_label = labels[0];
  model.positive_label = labels[1];
  model.hyper = hyper;

  const double n = static_cast<double>(corpus.size());
  double sum = 0.0;
  for (const auto& doc : corpus.documents()) sum += static_cast<double>(doc.token_count);
  const double mean = sum / n;
  double sq = 0.0;
  for (const auto& doc : corpus.documents()) {
    const double d = static_cast<double>(doc.token_count) - mean;
    sq += d * d;
  }
  model.normalization.mean = mean;
  model.normalization.stdev = std::sqrt(sq / n);
  // A constant length carries no information and cannot be standardised.
  if (model.normalization.stdev <= 0.0) {
    model.features.length = false;
    model.normalization.stdev = 1.0;
  }

  const FeatureMatrix X = featurize(corpus, model.features, model.hash_dim, model.normalization, model.hyper.bag_scale);
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    y[i] = corpus.documents()[static_cast<std::size_t>(i)].label == model.positive_label ? 1.0 : 0.0;

  ScaledWeights weights(X.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<Eigen::Index> batch;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    Rng rng(derive_seed(hyper.seed, "epoch-" + std::to_string(epoch)));
    rng.shuffle(std::span<Eigen::Index>(order));
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t stop = std::min(order.size(), start + hyper.batch_size);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      minibatch_step(X, y, batch, hyper.learning_rate, hyper.l2, weights, model.bias);
    }
  }
  model.weights = weights.materialize();
  if (!model.weights.allFinite() || !std::isfinite(model.bias)) {
    throw TrainingError("training diverged (non-finite weights); lower the learning rate");
  }
  return model;
}

std::vector<Prediction> predict(const LinearModel& model, const Corpus& corpus) {
  const FeatureMatrix X = featurize(corpus, model.features, model.hash_dim, model.normalization, model.hyper.bag_scale);
  const Eigen::VectorXd scores = (X * model.weights).array() + model.bias;
  std::vector<Prediction> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double s = scores[static_cast<Eigen::Index>(i)];
    out.push_back({corpus.documents()[i].id, s > 0.0 ? model.positive_label : model.negative_label, s});
  }
  return out;
}

std::vector<Prediction> length_threshold_predict(const SplitPoint& split, const Corpus& corpus) {
  std::vector<Prediction> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus.documents()) {
    const double score = static_cast<double>(split.threshold) + 0.5 - static_cast<double>(doc.token_count);
    out.push_back({doc.id, split.predict(doc.token_count), score});
  }
  return out;
}

nlohmann::ordered_json to_json(const LinearModel& model) {
  nlohmann::ordered_json j;
  j["type"] = "logistic-linear";
  j["labels"] = {{"negative", model.negative_label}, {"positive", model.positive_label}};
  j["feature_config"] = {{"length", model.features.length}, {"bag", model.features.bag}};
  j["hash_dim"] = model.hash_dim;
  j["hash"] = "column = 1 + fnv1a64(token utf-8 bytes) mod hash_dim; value = count * train.bag_scale / token_count";
  j["normalization"] = {{"mean", model.normalization.mean},
                        {"stdev", model.normalization.stdev},
                        {"clip", model.normalization.clip}};
  j["bias"] = model.bias;
  nlohmann::ordered_json weights = nlohmann::ordered_json::object();
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) {
    if (model.weights[i] == 0.0) continue;
    weights[i == 0 ? std::string("len") : "h:" + std::to_string(i - 1)] = model.weights[i];
  }
  j["weights"] = weights;
  j["train"] = {{"epochs", model.hyper.epochs},
                {"learning_rate", model.hyper.learning_rate},
                {"batch_size", model.hyper.batch_size},
                {"seed", model.hyper.seed},
                {"hash_dim", model.hyper.hash_dim},
                {"l2", model.hyper.l2},
                {"bag_scale", model.hyper.bag_scale}};
  return j;
}

LinearModel linear_model_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "logistic-linear") throw ConfigError("not a logistic-linear model artifact");
  LinearModel model;
  model.negative_label = j.at("labels").at("negative").get<Label>();
  model.positive_label = j.at("labels").at("positive").get<Label>();
  model.features.length = j.at("feature_config").at("length").get<bool>();
  model.features.bag = j.at("feature_config").at("bag").get<bool>();
  model.hash_dim = j.at("hash_dim").get<std::size_t>();
  if (model.hash_dim == 0) throw ConfigError("model hash_dim must be positive");
  model.normalization.mean = j.at("normalization").at("mean").get<double>();
  model.normalization.stdev = j.at("normalization").at("stdev").get<double>();
  model.normalization.clip = j.at("normalization").value("clip", model.normalization.clip);
  model.bias = j.at("bias").get<double>();
  model.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.hash_dim + 1));
  for (const auto& [key, value] : j.at("weights").items()) {
    Eigen::Index col;
    if (key == "len") {
      col = 0;
    } else if (key.rfind("h:", 0) == 0) {
      col = static_cast<Eigen::Index>(std::stoull(key.substr(2))) + 1;
    } else {
      throw ConfigError("unknown weight key '" + key + "'");
    }
    if (col >= model.weights.size()) throw ConfigError("weight key '" + key + "' exceeds hash_dim");
    model.weights[col] = value.get<double>();
  }
  if (const auto it = j.find("train"); it != j.end()) {
    model.hyper.epochs = it->value("epochs", model.hyper.epochs);
    model.hyper.learning_rate = it->value("learning_rate", model.hyper.learning_rate);
    model.hyper.batch_size = it->value("batch_size", model.hyper.batch_size);
    model.hyper.seed = it->value("seed", model.hyper.seed);
    model.hyper.hash_dim = it->value("hash_dim", model.hash_dim);
    model.hyper.l2 = it->value("l2", model.hyper.l2);
    model.hyper.bag_scale = it->value("bag_scale", model.hyper.bag_scale);
  }
  return model;
}

std::string predictions_csv(const std::vector<Prediction>& predictions) {
  std::string out = "doc_id,predicted_label,score\n";
  for (const auto& p : predictions) {
    out += csv_escape(p.doc_id);
    out += ',';
    out += std::to_string(p.predicted_label);
    out += ',';
    out += format_double(p.score);
    out += '\n';
  }
  return out;
}

std::vector<Prediction> parse_predictions_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows[0].size() != 3 || rows[0][0] != "doc_id") {
    throw ParseError(1, "predictions CSV must start with header doc_id,predicted_label,score");
  }
  std::vector<Prediction> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw ParseError(r + 1, "expected 3 fields");
    try {
      out.push_back({rows[r][0], std::stoll(rows[r][1]), std::stod(rows[r][2])});
    } catch (const std::logic_error&) {
      throw ParseError(r + 1, "malformed label or score");
    }
  }
  return out;
}

}  // namespace lenbias
