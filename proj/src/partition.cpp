#include "lenbias/partition.hpp"

#include <map>

#include "lenbias/error.hpp"

namespace lenbias {

bool in_gap(const Document& doc, const SplitPoint& split) {
  if (doc.label == split.positive_class) return doc.token_count <= split.threshold;
  return doc.token_count > split.threshold;
}

PartitionSet make_partitions(const Corpus& test, const SplitPoint& split, const LengthProfile& profile) {
  for (Label label : test.labels()) {
    if (label != profile.short_label && label != profile.long_label) {
      throw ArityError("test label " + std::to_string(label) + " does not occur in the training profile");
    }
  }
  PartitionSet parts;
  parts.split = split;
  for (const auto& doc : test.documents()) {
    (in_gap(doc, split) ? parts.gap_ids : parts.reverse_ids).insert(doc.id);
  }
  return parts;
}

Corpus subset(const Corpus& corpus, const std::set<std::string>& ids, const std::string& provenance) {
  return corpus.filtered([&](const Document& d) { return ids.contains(d.id); }, provenance);
}

nlohmann::ordered_json partition_summary(const PartitionSet& partitions, const Corpus& test) {
  auto composition = [&](auto&& member) {
    std::map<Label, std::size_t> per_class;
    for (Label label : test.labels()) per_class[label] = 0;
    for (const auto& doc : test.documents())
      if (member(doc.id)) ++per_class[doc.label];
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [label, n] : per_class) o[std::to_string(label)] = n;
    return o;
  };
  auto member_of = [](const std::set<std::string>& ids) {
    return [&ids](const std::string& id) { return ids.contains(id); };
  };
  nlohmann::ordered_json j;
  j["split"] = {{"threshold", partitions.split.threshold},
                {"macro_f1", partitions.split.f1},
                {"short_class", partitions.split.positive_class},
                {"long_class", partitions.split.negative_class},
                {"rule", SplitPoint::kRule}};
  j["sizes"] = {{"original", test.size()},
                {"gap", partitions.gap_ids.size()},
                {"reverse", partitions.reverse_ids.size()}};
  j["composition"] = {{"original", composition([](const std::string&) { return true; })},
                      {"gap", composition(member_of(partitions.gap_ids))},
                      {"reverse", composition(member_of(partitions.reverse_ids))}};
  j["gap_ids"] = partitions.gap_ids;
  j["reverse_ids"] = partitions.reverse_ids;
  return j;
}

PartitionSet partition_from_json(const nlohmann::json& j) {
  PartitionSet parts;
  const auto& split = j.at("split");
  parts.split.threshold = split.at("threshold").get<Length>();
  parts.split.f1 = split.at("macro_f1").get<double>();
  parts.split.positive_class = split.at("short_class").get<Label>();
  parts.split.negative_class = split.at("long_class").get<Label>();
  parts.gap_ids = j.at("gap_ids").get<std::set<std::string>>();
  parts.reverse_ids = j.at("reverse_ids").get<std::set<std::string>>();
  return parts;
}

}  // namespace lenbias
