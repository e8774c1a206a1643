#include "lenbias/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lenbias/error.hpp"
#include "lenbias/random.hpp"

namespace lenbias {

nlohmann::ordered_json to_json(const SyntheticConfig& c) {
  return {{"n_docs", c.n_docs},           {"seed", c.seed},
          {"short_label", c.short_label}, {"long_label", c.long_label},
          {"short_median", c.short_median}, {"long_median", c.long_median},
          {"sigma", c.sigma},             {"min_length", c.min_length},
          {"max_length", c.max_length},   {"signal", c.signal},
          {"cue_vocab", c.cue_vocab},     {"neutral_vocab", c.neutral_vocab},
          {"id_prefix", c.id_prefix}};
}

Corpus generate_synthetic(const SyntheticConfig& c) {
  if (c.short_label == c.long_label) throw ConfigError("synthetic classes need distinct labels");
  if (c.min_length == 0 || c.min_length > c.max_length) throw ConfigError("need 0 < min_length <= max_length");
  if (!(c.signal >= 0.0 && c.signal <= 1.0)) throw ConfigError("signal must lie in [0, 1]");
  if (c.cue_vocab == 0 || c.neutral_vocab == 0) throw ConfigError("vocabularies must be non-empty");
  if (!(c.short_median > 0.0 && c.long_median > 0.0 && c.sigma >= 0.0))
    throw ConfigError("medians must be positive and sigma non-negative");

  Rng rng(derive_seed(c.seed, "synthetic"));
  const int width = std::max(1, static_cast<int>(std::to_string(c.n_docs).size()));
  std::vector<Document> docs;
  docs.reserve(c.n_docs);
  for (std::size_t i = 0; i < c.n_docs; ++i) {
    Document doc;
    const bool is_short = i % 2 == 0;
    doc.label = is_short ? c.short_label : c.long_label;
    char id[64];
    std::snprintf(id, sizeof id, "%0*zu", width, i);
    doc.id = c.id_prefix + "-" + id;

    const double median = is_short ? c.short_median : c.long_median;
    const double raw = std::round(median * std::exp(c.sigma * rng.normal()));
    const auto len = static_cast<Length>(
        std::clamp(raw, static_cast<double>(c.min_length), static_cast<double>(c.max_length)));

    const std::string cue = "cue" + std::to_string(doc.label) + "_";
    for (Length t = 0; t < len; ++t) {
      if (t) doc.text += ' ';
      if (rng.bernoulli(c.signal)) doc.text += cue + std::to_string(rng.below(c.cue_vocab));
      else doc.text += "w" + std::to_string(rng.below(c.neutral_vocab));
    }
    doc.token_count = len;
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs), TokenizerMode::whitespace, "synthetic:seed=" + std::to_string(c.seed));
}

}  // namespace lenbias
