#pragma once

#include <map>
#include <string>

#include "lenbias/corpus.hpp"

namespace lenbias {

/// Token length -> number of documents with that length.
using LengthHistogram = std::map<Length, std::size_t>;

struct ClassStats {
  LengthHistogram histogram;
  std::size_t n = 0;
  double mean = 0.0;
  /// Lower median of the token counts.
  Length median = 0;
};

/// Length profile of a two-class corpus. The short class is the one with the
/// lower mean token count (ties go to the lower class id).
struct LengthProfile {
  Label short_label = 0;
  Label long_label = 0;
  std::map<Label, ClassStats> per_class;
  double overlap_pct = 0.0;

  const ClassStats& short_stats() const { return per_class.at(short_label); }
  const ClassStats& long_stats() const { return per_class.at(long_label); }
  Length max_length() const;
};

/// Length-only classifier: len <= threshold predicts the short class.
/// `f1` is the macro-averaged F1 of that rule over both classes.
struct SplitPoint {
  Length threshold = 0;
  double f1 = 0.0;
  Label positive_class = 0;
  Label negative_class = 0;

  static constexpr const char* kRule = "len <= threshold -> short class, len > threshold -> long class";

  Label predict(Length len) const { return len <= threshold ? positive_class : negative_class; }
};

LengthHistogram histogram_of(const Corpus& corpus, Label label);

/// Histogram intersection over integer-length bins, in percent:
/// 100 * sum_l min(pa(l), pb(l)) with each histogram normalised to unit mass.
double compute_overlap(const LengthHistogram& a, const LengthHistogram& b);

LengthProfile compute_profile(const Corpus& corpus);

/// Macro F1 of the split rule at `threshold`. `short_at_or_below` and
/// friends are the confusion counts, so callers can score thresholds without
/// rescanning a corpus.
double split_macro_f1(std::size_t short_at_or_below, std::size_t short_total,
                      std::size_t long_at_or_below, std::size_t long_total);

/// Exhaustive scan over {0} and every observed length; highest macro F1 wins,
/// ties go to the smallest threshold.
SplitPoint optimal_split(const Corpus& corpus, const LengthProfile& profile);

/// Markdown summary of a profile and split.
std::string profile_markdown(const LengthProfile& profile, const SplitPoint& split,
                             const std::string& source);
/// One CSV row per class: label,role,n,mean,median.
std::string profile_csv(const LengthProfile& profile, const SplitPoint& split);
/// length,count_<short>,count_<long> for plotting the two distributions.
std::string histogram_csv(const LengthProfile& profile);

}  // namespace lenbias
