#include "lenbias/analysis.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include "lenbias/error.hpp"
#include "lenbias/io.hpp"

namespace lenbias {

Length LengthProfile::max_length() const {
  Length max_len = 0;
  for (const auto& [label, stats] : per_class)
    if (!stats.histogram.empty()) max_len = std::max(max_len, stats.histogram.rbegin()->first);
  return max_len;
}

LengthHistogram histogram_of(const Corpus& corpus, Label label) {
  LengthHistogram hist;
  for (const auto& doc : corpus.documents())
    if (doc.label == label) ++hist[doc.token_count];
  return hist;
}

double compute_overlap(const LengthHistogram& a, const LengthHistogram& b) {
  std::size_t total_a = 0;
  std::size_t total_b = 0;
  for (const auto& [len, n] : a) total_a += n;
  for (const auto& [len, n] : b) total_b += n;
  if (total_a == 0 || total_b == 0) throw ProfileError("overlap of an empty histogram is undefined");

  // Merge-walk the two sorted supports; only shared lengths contribute.
  // Accumulate in integer cross-multiplied form so overlap(h, h) and scaled
  // copies come out exactly 100.
  double shared = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      const double ma = static_cast<double>(ia->second) * static_cast<double>(total_b);
      const double mb = static_cast<double>(ib->second) * static_cast<double>(total_a);
      shared += std::min(ma, mb);
      ++ia;
      ++ib;
    }
  }
  const double pct = 100.0 * shared / (static_cast<double>(total_a) * static_cast<double>(total_b));
  return std::clamp(pct, 0.0, 100.0);
}

LengthProfile compute_profile(const Corpus& corpus) {
  const auto labels = corpus.require_two_classes();
  LengthProfile profile;
  for (Label label : labels) {
    ClassStats stats;
    std::vector<Length> lens;
    double sum = 0.0;
    for (const auto& doc : corpus.documents()) {
      if (doc.label != label) continue;
      lens.push_back(doc.token_count);
      ++stats.histogram[doc.token_count];
      sum += static_cast<double>(doc.token_count);
    }
    if (lens.empty()) throw ProfileError("class " + std::to_string(label) + " has no documents");
    stats.n = lens.size();
    stats.mean = sum / static_cast<double>(stats.n);
    const auto mid = lens.begin() + static_cast<std::ptrdiff_t>((lens.size() - 1) / 2);
    std::nth_element(lens.begin(), mid, lens.end());
    stats.median = *mid;
    profile.per_class.emplace(label, std::move(stats));
  }
  const auto& first = profile.per_class.at(labels[0]);
  const auto& second = profile.per_class.at(labels[1]);
  if (second.mean < first.mean) {
    profile.short_label = labels[1];
    profile.long_label = labels[0];
  } else {
    profile.short_label = labels[0];
    profile.long_label = labels[1];
  }
  profile.overlap_pct = compute_overlap(first.histogram, second.histogram);
  return profile;
}

double split_macro_f1(std::size_t short_at_or_below, std::size_t short_total,
                      std::size_t long_at_or_below, std::size_t long_total) {
  auto f1 = [](double tp, double fp, double fn) {
    const double denom = 2.0 * tp + fp + fn;
    return denom > 0.0 ? 2.0 * tp / denom : 0.0;
  };
  const auto tp_short = static_cast<double>(short_at_or_below);
  const auto fn_short = static_cast<double>(short_total - short_at_or_below);
  const auto fp_short = static_cast<double>(long_at_or_below);
  const auto tp_long = static_cast<double>(long_total - long_at_or_below);
  // For the long class the roles of the two error counts swap.
  return 0.5 * (f1(tp_short, fp_short, fn_short) + f1(tp_long, fn_short, fp_short));
}

SplitPoint optimal_split(const Corpus& corpus, const LengthProfile& profile) {
  const auto& short_hist = profile.short_stats().histogram;
  const auto& long_hist = profile.long_stats().histogram;
  const std::size_t n_short = profile.short_stats().n;
  const std::size_t n_long = profile.long_stats().n;

  std::set<Length> candidates{0};
  for (const auto& doc : corpus.documents()) candidates.insert(doc.token_count);

  SplitPoint best;
  best.positive_class = profile.short_label;
  best.negative_class = profile.long_label;
  best.f1 = -1.0;
  auto is = short_hist.begin();
  auto il = long_hist.begin();
  std::size_t short_le = 0;
  std::size_t long_le = 0;
  for (Length t : candidates) {
    while (is != short_hist.end() && is->first <= t) short_le += (is++)->second;
    while (il != long_hist.end() && il->first <= t) long_le += (il++)->second;
    const double f1 = split_macro_f1(short_le, n_short, long_le, n_long);
    if (f1 > best.f1) {
      best.f1 = f1;
      best.threshold = t;
    }
  }
  return best;
}

std::string profile_markdown(const LengthProfile& profile, const SplitPoint& split,
                             const std::string& source) {
  std::ostringstream md;
  md << "# Length profile\n\n";
  if (!source.empty()) md << "Source: `" << source << "`\n\n";
  md << "| class | role | n | mean length | median length |\n";
  md << "|---|---|---|---|---|\n";
  for (Label label : {profile.short_label, profile.long_label}) {
    const auto& stats = profile.per_class.at(label);
    char mean[32];
    std::snprintf(mean, sizeof mean, "%.2f", stats.mean);
    md << "| " << label << " | " << (label == profile.short_label ? "short" : "long") << " | "
       << stats.n << " | " << mean << " | " << stats.median << " |\n";
  }
  md << "\nOverlap of class length distributions: " << format_percent(profile.overlap_pct / 100.0)
     << " %\n\n";
  md << "## Optimal split point\n\n";
  md << "- threshold: " << split.threshold << " tokens\n";
  md << "- macro F1: " << format_percent(split.f1) << " %\n";
  md << "- rule: " << SplitPoint::kRule << " (short class = " << split.positive_class << ")\n";
  return md.str();
}

std::string profile_csv(const LengthProfile& profile, const SplitPoint& split) {
  std::ostringstream csv;
  csv << "label,role,n,mean,median,overlap_pct,split_threshold,split_macro_f1\n";
  for (Label label : {profile.short_label, profile.long_label}) {
    const auto& stats = profile.per_class.at(label);
    csv << label << ',' << (label == profile.short_label ? "short" : "long") << ',' << stats.n << ','
        << format_double(stats.mean) << ',' << stats.median << ','
        << format_double(profile.overlap_pct) << ',' << split.threshold << ','
        << format_double(split.f1) << '\n';
  }
  return csv.str();
}

std::string histogram_csv(const LengthProfile& profile) {
  const auto& s = profile.short_stats().histogram;
  const auto& l = profile.long_stats().histogram;
  std::set<Length> lengths;
  for (const auto& [len, n] : s) lengths.insert(len);
  for (const auto& [len, n] : l) lengths.insert(len);
  std::ostringstream csv;
  csv << "length,count_" << profile.short_label << ",count_" << profile.long_label << '\n';
  for (Length len : lengths) {
    auto a = s.find(len);
    auto b = l.find(len);
    csv << len << ',' << (a == s.end() ? 0 : a->second) << ',' << (b == l.end() ? 0 : b->second)
        << '\n';
  }
  return csv.str();
}

}  // namespace lenbias
