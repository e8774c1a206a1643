#include "lenbias/evaluation.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "lenbias/error.hpp"
#include "lenbias/io.hpp"

namespace lenbias {

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += "'" + ids[i] + "'";
  }
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

double ratio(std::size_t correct, std::size_t n) {
  return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace

nlohmann::ordered_json to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["accuracy_original"] = r.accuracy_original;
  j["accuracy_gap"] = r.accuracy_gap;
  j["accuracy_reverse"] = r.accuracy_reverse;
  j["delta_gap_reverse"] = r.delta_gap_reverse;
  j["n"] = {{"original", r.n_original}, {"gap", r.n_gap}, {"reverse", r.n_reverse}};
  j["metadata"] = {{"train_provenance", r.train_provenance}, {"train_overlap", r.train_overlap}};
  return j;
}

EvaluationReport evaluation_report_from_json(const nlohmann::json& j) {
  const auto& body = j.contains("report") ? j.at("report") : j;
  EvaluationReport r;
  r.accuracy_original = body.at("accuracy_original").get<double>();
  r.accuracy_gap = body.at("accuracy_gap").get<double>();
  r.accuracy_reverse = body.at("accuracy_reverse").get<double>();
  r.delta_gap_reverse = body.at("delta_gap_reverse").get<double>();
  r.n_original = body.at("n").at("original").get<std::size_t>();
  r.n_gap = body.at("n").at("gap").get<std::size_t>();
  r.n_reverse = body.at("n").at("reverse").get<std::size_t>();
  if (const auto it = body.find("metadata"); it != body.end()) {
    r.train_provenance = it->value("train_provenance", "");
    r.train_overlap = it->value("train_overlap", 0.0);
  }
  return r;
}

EvaluationReport evaluate(const std::vector<Prediction>& predictions, const Corpus& test,
                          const PartitionSet& partitions) {
  std::map<std::string, const Prediction*> by_id;
  std::vector<std::string> duplicates;
  std::vector<std::string> unknown;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.doc_id, &p).second) duplicates.push_back(p.doc_id);
    if (test.find(p.doc_id) == nullptr) unknown.push_back(p.doc_id);
  }
  std::vector<std::string> missing;
  std::vector<std::string> unpartitioned;
  for (const auto& doc : test.documents()) {
    if (!by_id.contains(doc.id)) missing.push_back(doc.id);
    const bool gap = partitions.gap_ids.contains(doc.id);
    const bool rev = partitions.reverse_ids.contains(doc.id);
    if (gap == rev) unpartitioned.push_back(doc.id);
  }
  if (!missing.empty() || !duplicates.empty() || !unknown.empty()) {
    std::string msg = "predictions do not cover the test set one-to-one.";
    if (!missing.empty()) msg += " missing: " + join_ids(missing) + ".";
    if (!duplicates.empty()) msg += " duplicated: " + join_ids(duplicates) + ".";
    if (!unknown.empty()) msg += " unknown: " + join_ids(unknown) + ".";
    throw CoverageError(msg);
  }
  if (!unpartitioned.empty() ||
      partitions.gap_ids.size() + partitions.reverse_ids.size() != test.size()) {
    throw CoverageError("partition does not split the test set exactly; offending ids: " +
                        join_ids(unpartitioned));
  }

  std::size_t correct_gap = 0;
  std::size_t correct_rev = 0;
  EvaluationReport r;
  for (const auto& doc : test.documents()) {
    const bool correct = by_id.at(doc.id)->predicted_label == doc.label;
    if (partitions.gap_ids.contains(doc.id)) {
      ++r.n_gap;
      correct_gap += correct ? 1 : 0;
    } else {
      ++r.n_reverse;
      correct_rev += correct ? 1 : 0;
    }
  }
  r.n_original = test.size();
  r.accuracy_original = ratio(correct_gap + correct_rev, r.n_original);
  r.accuracy_gap = ratio(correct_gap, r.n_gap);
  r.accuracy_reverse = ratio(correct_rev, r.n_reverse);
  r.delta_gap_reverse = r.accuracy_gap - r.accuracy_reverse;

  if (r.n_original > 0) {
    const double weighted = (static_cast<double>(r.n_gap) * r.accuracy_gap +
                             static_cast<double>(r.n_reverse) * r.accuracy_reverse) /
                            static_cast<double>(r.n_original);
    if (std::abs(weighted - r.accuracy_original) > 1e-9)
      throw std::logic_error("original accuracy is not the weighted average of Gap and Reverse");
  }
  return r;
}

std::string evaluation_markdown(const EvaluationReport& r, const std::string& title) {
  std::ostringstream md;
  md << "# " << title << "\n\n";
  if (!r.train_provenance.empty()) md << "Training set: `" << r.train_provenance << "`\n\n";
  md << "| train overlap | original test | gap test | reverse test | delta gap-reverse |\n";
  md << "|---|---|---|---|---|\n";
  md << "| " << format_percent(r.train_overlap / 100.0) << " % | " << format_percent(r.accuracy_original)
     << " % | " << format_percent(r.accuracy_gap) << " % | " << format_percent(r.accuracy_reverse) << " % | "
     << format_percent(r.delta_gap_reverse) << " % |\n\n";
  md << "Sizes: original " << r.n_original << ", gap " << r.n_gap << ", reverse " << r.n_reverse << "\n";
  return md.str();
}

std::string evaluation_csv(const EvaluationReport& r) {
  std::ostringstream csv;
  csv << "train_overlap,accuracy_original,accuracy_gap,accuracy_reverse,delta_gap_reverse,n_original,n_gap,"
         "n_reverse,train_provenance\n";
  csv << format_double(r.train_overlap) << ',' << format_double(r.accuracy_original) << ','
      << format_double(r.accuracy_gap) << ',' << format_double(r.accuracy_reverse) << ','
      << format_double(r.delta_gap_reverse) << ',' << r.n_original << ',' << r.n_gap << ',' << r.n_reverse << ','
      << csv_escape(r.train_provenance) << '\n';
  return csv.str();
}

std::string ComparisonRow::flag() const {
  return reduced ? "reduced by " + format_percent(relative_reduction) + "%" : "";
}

ComparisonTable compare(const std::vector<std::pair<std::string, EvaluationReport>>& reports) {
  if (reports.size() < 2) throw ConfigError("compare needs at least two reports");
  ComparisonTable table;
  const double base = reports.front().second.delta_gap_reverse;
  for (const auto& [label, report] : reports) {
    ComparisonRow row{label, report};
    row.delta_change = report.delta_gap_reverse - base;
    row.reduced = report.delta_gap_reverse < base;
    row.relative_reduction = base > 0.0 ? (base - report.delta_gap_reverse) / base : 0.0;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string ComparisonTable::markdown() const {
  std::ostringstream md;
  md << "| metric |";
  for (const auto& row : rows) md << ' ' << row.label << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < rows.size(); ++i) md << "---|";
  md << '\n';
  auto line = [&](const char* name, auto&& cell) {
    md << "| " << name << " |";
    for (const auto& row : rows) md << ' ' << cell(row) << " |";
    md << '\n';
  };
  line("train overlap", [](const ComparisonRow& r) { return format_percent(r.report.train_overlap / 100.0) + " %"; });
  line("original test", [](const ComparisonRow& r) { return format_percent(r.report.accuracy_original) + " %"; });
  line("gap test", [](const ComparisonRow& r) { return format_percent(r.report.accuracy_gap) + " %"; });
  line("reverse test", [](const ComparisonRow& r) { return format_percent(r.report.accuracy_reverse) + " %"; });
  line("delta gap-reverse", [](const ComparisonRow& r) { return format_percent(r.report.delta_gap_reverse) + " %"; });
  line("delta vs first", [](const ComparisonRow& r) { return format_percent(r.delta_change) + " pts"; });
  line("mitigation", [](const ComparisonRow& r) { return r.flag().empty() ? std::string("-") : r.flag(); });
  return md.str();
}

std::string ComparisonTable::csv() const {
  std::ostringstream csv;
  csv << "label,train_overlap,accuracy_original,accuracy_gap,accuracy_reverse,delta_gap_reverse,delta_change,"
         "relative_reduction,flag\n";
  for (const auto& row : rows) {
    csv << csv_escape(row.label) << ',' << format_double(row.report.train_overlap) << ','
        << format_double(row.report.accuracy_original) << ',' << format_double(row.report.accuracy_gap) << ','
        << format_double(row.report.accuracy_reverse) << ',' << format_double(row.report.delta_gap_reverse) << ','
        << format_double(row.delta_change) << ',' << format_double(row.relative_reduction) << ','
        << csv_escape(row.flag()) << '\n';
  }
  return csv.str();
}

}  // namespace lenbias
