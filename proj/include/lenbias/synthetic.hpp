#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "lenbias/corpus.hpp"

namespace lenbias {

/// Two-class corpus whose content signal and length distributions are set
/// independently. Lengths are log-normal around each class median; every
/// token is a class cue (`cue<label>_<j>`) with probability `signal`, and a
/// neutral word (`w<j>`) otherwise. Labels alternate, so the corpus is
/// balanced.
struct SyntheticConfig {
  std::size_t n_docs = 20000;
  std::uint64_t seed = 0;
  Label short_label = 1;
  Label long_label = 0;
  double short_median = 77.0;
  double long_median = 88.0;
  double sigma = 0.45;
  Length min_length = 4;
  Length max_length = 512;
  double signal = 0.04;
  std::size_t cue_vocab = 50;
  std::size_t neutral_vocab = 2000;
  std::string id_prefix = "doc";
};

nlohmann::ordered_json to_json(const SyntheticConfig& config);

Corpus generate_synthetic(const SyntheticConfig& config);

}  // namespace lenbias
