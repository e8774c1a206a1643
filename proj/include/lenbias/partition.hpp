#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "lenbias/analysis.hpp"
#include "lenbias/corpus.hpp"

namespace lenbias {

/// Gap-test holds documents whose length agrees with their class under the
/// training split (short class at or below the threshold, long class above
/// it). Reverse-test is the complement.
struct PartitionSet {
  std::set<std::string> gap_ids;
  std::set<std::string> reverse_ids;
  SplitPoint split;
};

bool in_gap(const Document& doc, const SplitPoint& split);

PartitionSet make_partitions(const Corpus& test, const SplitPoint& split, const LengthProfile& profile);

/// The documents of `corpus` whose ids are in `ids`, in corpus order.
Corpus subset(const Corpus& corpus, const std::set<std::string>& ids, const std::string& provenance);

/// Sizes, per-class composition, the split, and both id lists.
nlohmann::ordered_json partition_summary(const PartitionSet& partitions, const Corpus& test);
PartitionSet partition_from_json(const nlohmann::json& j);

}  // namespace lenbias
