#include "lenbias/injection.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <vector>

#include "lenbias/error.hpp"
#include "lenbias/io.hpp"
#include "lenbias/random.hpp"

namespace lenbias {

namespace {

std::string bound_string(Length v) { return v == kUnbounded ? "inf" : std::to_string(v); }

nlohmann::ordered_json bound_json(Length v) {
  return v == kUnbounded ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
}

Length bound_from_json(const nlohmann::json& j) { return j.is_null() ? kUnbounded : j.get<Length>(); }

// Dense per-length counts for both classes plus running totals, so the
// overlap of any threshold pair is a short loop over shared lengths.
struct DenseCounts {
  std::vector<std::size_t> short_counts;
  std::vector<std::size_t> long_counts;
  std::vector<std::size_t> short_le;  // short docs with len <= i
  std::vector<std::size_t> long_ge;   // long docs with len >= i
  std::vector<Length> distinct;

  DenseCounts(const Corpus& corpus, const LengthProfile& profile) {
    const Length max_len = profile.max_length();
    short_counts.assign(max_len + 1, 0);
    long_counts.assign(max_len + 1, 0);
    std::set<Length> seen;
    for (const auto& doc : corpus.documents()) {
      seen.insert(doc.token_count);
      if (doc.label == profile.short_label) ++short_counts[doc.token_count];
      else ++long_counts[doc.token_count];
    }
    distinct.assign(seen.begin(), seen.end());
    short_le.assign(max_len + 1, 0);
    long_ge.assign(max_len + 2, 0);
    std::size_t acc = 0;
    for (Length i = 0; i <= max_len; ++i) short_le[i] = (acc += short_counts[i]);
    acc = 0;
    for (Length i = max_len + 1; i-- > 0;) long_ge[i] = (acc += long_counts[i]);
  }

  Length max_len() const { return short_counts.size() - 1; }

  // Same arithmetic as compute_overlap, restricted to the retained sets.
  double overlap(Length lower, Length upper, std::size_t n_long, std::size_t n_short) const {
    double shared = 0.0;
    const Length hi = std::min(upper, max_len());
    for (Length len = lower; len <= hi; ++len) {
      if (short_counts[len] == 0 || long_counts[len] == 0) continue;
      const double ms = static_cast<double>(short_counts[len]) * static_cast<double>(n_long);
      const double ml = static_cast<double>(long_counts[len]) * static_cast<double>(n_short);
      shared += std::min(ms, ml);
    }
    const double pct = 100.0 * shared / (static_cast<double>(n_long) * static_cast<double>(n_short));
    return std::clamp(pct, 0.0, 100.0);
  }
};

}  // namespace

std::size_t InjectionSpec::total_retained() const {
  std::size_t n = 0;
  for (const auto& [label, count] : retained) n += count;
  return n;
}

nlohmann::ordered_json to_json(const InjectionSpec& spec) {
  nlohmann::ordered_json j;
  j["lower"] = bound_json(spec.lower);
  j["upper"] = bound_json(spec.upper);
  j["target_overlap"] = spec.target_overlap ? nlohmann::ordered_json(*spec.target_overlap)
                                            : nlohmann::ordered_json(nullptr);
  j["original_overlap"] = spec.original_overlap;
  j["achieved_overlap"] = spec.achieved_overlap;
  j["rule"] = "long class keeps len >= lower; short class keeps len <= upper";
  auto counts = [](const std::map<Label, std::size_t>& m) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [label, n] : m) o[std::to_string(label)] = n;
    return o;
  };
  j["retained"] = counts(spec.retained);
  j["dropped"] = counts(spec.dropped);
  return j;
}

InjectionSpec injection_spec_from_json(const nlohmann::json& j) {
  InjectionSpec spec;
  spec.lower = bound_from_json(j.at("lower"));
  spec.upper = bound_from_json(j.at("upper"));
  if (j.contains("target_overlap") && !j.at("target_overlap").is_null())
    spec.target_overlap = j.at("target_overlap").get<double>();
  spec.original_overlap = j.value("original_overlap", 0.0);
  spec.achieved_overlap = j.at("achieved_overlap").get<double>();
  for (const auto& [key, n] : j.at("retained").items()) spec.retained[std::stoll(key)] = n.get<std::size_t>();
  for (const auto& [key, n] : j.at("dropped").items()) spec.dropped[std::stoll(key)] = n.get<std::size_t>();
  return spec;
}

std::pair<Corpus, InjectionSpec> alter_training_set(const Corpus& corpus, const LengthProfile& profile,
                                                    Length lower, Length upper) {
  corpus.require_two_classes();
  const Label short_label = profile.short_label;
  const Label long_label = profile.long_label;
  auto keep = [&](const Document& d) {
    if (d.label == long_label) return d.token_count >= lower;
    return d.token_count <= upper;
  };
  std::string provenance = corpus.provenance();
  if (!provenance.empty()) provenance += " | ";
  provenance += "altered: L=" + bound_string(lower) + ",U=" + bound_string(upper);
  Corpus altered = corpus.filtered(keep, std::move(provenance));

  InjectionSpec spec;
  spec.lower = lower;
  spec.upper = upper;
  spec.original_overlap = profile.overlap_pct;
  for (Label label : {short_label, long_label}) {
    spec.retained[label] = altered.count(label);
    spec.dropped[label] = corpus.count(label) - spec.retained[label];
    if (spec.retained[label] == 0) {
      throw InjectionError("thresholds L=" + bound_string(lower) + ", U=" + bound_string(upper) +
                           " leave class " + std::to_string(label) + " empty");
    }
  }
  spec.achieved_overlap =
      compute_overlap(histogram_of(altered, short_label), histogram_of(altered, long_label));
  return {std::move(altered), std::move(spec)};
}

std::string to_string(ThresholdSearch::Policy policy) {
  return policy == ThresholdSearch::Policy::balanced ? "balanced" : "closest";
}

ThresholdSearch::Policy parse_threshold_policy(std::string_view text) {
  if (text == "closest") return ThresholdSearch::Policy::closest;
  if (text == "balanced") return ThresholdSearch::Policy::balanced;
  throw ConfigError("unknown threshold policy '" + std::string(text) + "' (expected closest, balanced)");
}

InjectionSpec thresholds_for_overlap(const Corpus& corpus, const LengthProfile& profile,
                                     double target_overlap, const ThresholdSearch& search) {
  corpus.require_two_classes();
  if (!(search.resolution >= 0.0)) throw ConfigError("resolution must be non-negative");
  const bool balanced = search.policy == ThresholdSearch::Policy::balanced;
  if (!(target_overlap >= 0.0) || target_overlap > profile.overlap_pct + 1e-9) {
    throw SearchError("target overlap " + format_double(target_overlap) + " outside [0, " +
                      format_double(profile.overlap_pct) + "]");
  }
  const DenseCounts dense(corpus, profile);
  const Length max_len = dense.max_len();

  // One representative per distinct retained subset: the smallest lower
  // bound and the largest upper bound that select it.
  std::vector<Length> lowers{0};
  std::vector<Length> uppers;
  for (std::size_t i = 0; i < dense.distinct.size(); ++i) {
    const Length d = dense.distinct[i];
    if (i + 1 < dense.distinct.size()) {
      lowers.push_back(d + 1);
      uppers.push_back(dense.distinct[i + 1] - 1);
    } else {
      uppers.push_back(max_len);
    }
  }

  const double total_short = static_cast<double>(dense.short_le[max_len]);
  const double total_long = static_cast<double>(dense.long_ge[0]);

  struct Best {
    bool within = false;
    double balance = -1.0;
    double diff = std::numeric_limits<double>::infinity();
    std::size_t retained = 0;
    Length lower = 0;
    Length upper = 0;
    double overlap = 0.0;
  } best;

  for (Length lower : lowers) {
    if (search.anchor && lower > *search.anchor + 1) continue;
    const std::size_t n_long = dense.long_ge[std::min(lower, max_len + 1)];
    if (n_long == 0) continue;
    for (Length upper : uppers) {
      if (lower > upper + 1) continue;
      if (search.anchor && upper < *search.anchor) continue;
      const std::size_t n_short = dense.short_le[upper];
      if (n_short == 0) continue;
      Best c;
      c.overlap = dense.overlap(lower, upper, n_long, n_short);
      c.diff = std::abs(c.overlap - target_overlap);
      c.within = balanced && c.diff <= search.resolution;
      c.balance = c.within ? std::min(static_cast<double>(n_short) / total_short,
                                      static_cast<double>(n_long) / total_long)
                           : -1.0;
      c.retained = n_long + n_short;
      c.lower = lower;
      c.upper = upper;
      // Visited in (lower, upper) order: full ties keep the smallest lower
      // and, for it, the largest upper.
      const auto key = [](const Best& b) { return std::tuple(b.within, b.balance, -b.diff, b.retained); };
      if (key(c) > key(best) || (key(c) == key(best) && c.lower == best.lower)) best = c;
    }
  }
  if (!std::isfinite(best.diff)) throw SearchError("no threshold pair keeps both classes non-empty");
  if (best.diff > search.tolerance) {
    throw SearchError("target overlap " + format_double(target_overlap) +
                      " unreachable within " + format_double(search.tolerance) + " points; best found L=" +
                      std::to_string(best.lower) + ", U=" + std::to_string(best.upper) +
                      " with overlap " + format_double(best.overlap));
  }
  auto [altered, spec] = alter_training_set(corpus, profile, best.lower, best.upper);
  spec.target_overlap = target_overlap;
  return spec;
}

nlohmann::ordered_json to_json(const WindowResult& result) {
  nlohmann::ordered_json j;
  j["lower"] = result.lower;
  j["upper"] = result.upper;
  j["overlap_before"] = result.overlap_before;
  j["overlap_after"] = result.overlap_after;
  j["matched"] = result.matched;
  nlohmann::ordered_json retained = nlohmann::ordered_json::object();
  for (const auto& [label, n] : result.retained) retained[std::to_string(label)] = n;
  j["retained"] = retained;
  j["size"] = result.corpus.size();
  return j;
}

Corpus match_lengths(const Corpus& corpus, std::uint64_t seed) {
  const auto labels = corpus.labels();
  // (length, label) -> (rank key, id) of its documents
  std::map<std::pair<Length, Label>, std::vector<std::pair<std::uint64_t, std::string>>> groups;
  for (const auto& doc : corpus.documents())
    groups[{doc.token_count, doc.label}].emplace_back(derive_seed(seed, "match:" + doc.id), doc.id);
  std::set<std::string> keep;
  for (auto& [key, members] : groups) {
    if (labels.size() != 2) continue;
    const Label other = key.second == labels[0] ? labels[1] : labels[0];
    const auto it = groups.find({key.first, other});
    const std::size_t quota = it == groups.end() ? 0 : std::min(members.size(), it->second.size());
    std::sort(members.begin(), members.end());
    for (std::size_t i = 0; i < quota; ++i) keep.insert(members[i].second);
  }
  std::string provenance = corpus.provenance();
  if (!provenance.empty()) provenance += " | ";
  provenance += "matched: seed=" + std::to_string(seed);
  return corpus.filtered([&](const Document& d) { return keep.contains(d.id); }, std::move(provenance));
}

WindowResult filter_overlap_window(const Corpus& corpus, Length lower, Length upper,
                                   std::optional<std::uint64_t> match_seed) {
  const auto labels = corpus.require_two_classes();
  WindowResult result;
  result.lower = lower;
  result.upper = upper;
  result.overlap_before =
      compute_overlap(histogram_of(corpus, labels[0]), histogram_of(corpus, labels[1]));
  std::string provenance = corpus.provenance();
  if (!provenance.empty()) provenance += " | ";
  provenance += "window: [" + std::to_string(lower) + "," + std::to_string(upper) + "]";
  result.corpus = corpus.filtered(
      [&](const Document& d) { return d.token_count >= lower && d.token_count <= upper; },
      std::move(provenance));
  if (match_seed) {
    result.matched = true;
    result.corpus = match_lengths(result.corpus, *match_seed);
  }
  for (Label label : labels) {
    result.retained[label] = result.corpus.count(label);
    if (result.retained[label] == 0) {
      throw FilterError("window [" + std::to_string(lower) + ", " + std::to_string(upper) +
                        "] holds no observations of class " + std::to_string(label));
    }
  }
  result.overlap_after = compute_overlap(histogram_of(result.corpus, labels[0]),
                                         histogram_of(result.corpus, labels[1]));
  return result;
}

}  // namespace lenbias
