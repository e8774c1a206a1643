#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "lenbias/analysis.hpp"
#include "lenbias/corpus.hpp"

namespace lenbias {

inline constexpr Length kUnbounded = std::numeric_limits<Length>::max();

/// Thresholds that bias a training set by length, and what they did to it.
/// The long class keeps len >= lower and the short class keeps len <= upper
/// (both bounds inclusive). `lower == upper + 1` is the tightest disjoint
/// cut: the classes then share no length at all.
struct InjectionSpec {
  Length lower = 0;
  Length upper = kUnbounded;
  std::optional<double> target_overlap;
  double original_overlap = 0.0;
  double achieved_overlap = 0.0;
  std::map<Label, std::size_t> retained;
  std::map<Label, std::size_t> dropped;

  std::size_t total_retained() const;
};

nlohmann::ordered_json to_json(const InjectionSpec& spec);
InjectionSpec injection_spec_from_json(const nlohmann::json& j);

/// Drops long-class documents shorter than `lower` and short-class documents
/// longer than `upper`. Throws InjectionError if either class ends up empty.
std::pair<Corpus, InjectionSpec> alter_training_set(const Corpus& corpus, const LengthProfile& profile,
                                                    Length lower, Length upper);

struct ThresholdSearch {
  enum class Policy {
    /// Closest overlap, then most retained documents.
    closest,
    /// Pairs within `resolution` points of the target ranked by the smaller
    /// of the two per-class retained fractions, so both classes are trimmed
    /// alike; then closest overlap, then most retained. Falls back to
    /// `closest` when no pair is inside the resolution.
    balanced,
  };
  Policy policy = Policy::closest;
  /// Largest accepted |achieved - target|, in points.
  double tolerance = 5.0;
  double resolution = 1.0;
  /// When set, only pairs with lower <= anchor + 1 and upper >= anchor
  /// qualify: the kept lengths of both classes straddle the anchor, and the
  /// disjoint cut is exactly lower = anchor + 1, upper = anchor.
  std::optional<Length> anchor;
};

std::string to_string(ThresholdSearch::Policy policy);
ThresholdSearch::Policy parse_threshold_policy(std::string_view text);

/// Grid search for the (lower, upper) pair that brings the overlap to
/// `target_overlap`, ranked by `search.policy`; full ties go to the smallest
/// lower, then the largest upper. Each pair of the grid stands for one
/// distinct retained subset, so the search is exhaustive over every integer
/// threshold pair with lower <= upper + 1. Throws SearchError when the chosen
/// pair misses the target by more than the tolerance.
InjectionSpec thresholds_for_overlap(const Corpus& corpus, const LengthProfile& profile,
                                     double target_overlap, const ThresholdSearch& search = {});

struct WindowResult {
  Corpus corpus;
  Length lower = 0;
  Length upper = 0;
  double overlap_before = 0.0;
  double overlap_after = 0.0;
  bool matched = false;
  std::map<Label, std::size_t> retained;
};

nlohmann::ordered_json to_json(const WindowResult& result);

/// Keeps, at every length, the same number of documents from each class:
/// the smaller of the two counts, picking the documents that rank first
/// under a seeded hash of their id. Lengths present in one class only are
/// dropped. Class histograms of the result are identical, so its overlap is
/// 100 unless it is empty.
Corpus match_lengths(const Corpus& corpus, std::uint64_t seed);

/// Keeps documents of both classes with lower <= len <= upper, then, given
/// `match_seed`, applies match_lengths. An inverted window keeps nothing.
/// Throws FilterError when either class is left empty: there are no
/// observations to train on.
WindowResult filter_overlap_window(const Corpus& corpus, Length lower, Length upper,
                                   std::optional<std::uint64_t> match_seed = std::nullopt);

}  // namespace lenbias
