#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lenbias/baselines.hpp"
#include "lenbias/corpus.hpp"
#include "lenbias/partition.hpp"

namespace lenbias {

struct EvaluationReport {
  double accuracy_original = 0.0;
  double accuracy_gap = 0.0;
  double accuracy_reverse = 0.0;
  double delta_gap_reverse = 0.0;
  std::size_t n_original = 0;
  std::size_t n_gap = 0;
  std::size_t n_reverse = 0;
  std::string train_provenance;
  double train_overlap = 0.0;
};

nlohmann::ordered_json to_json(const EvaluationReport& report);
EvaluationReport evaluation_report_from_json(const nlohmann::json& j);

/// Micro accuracy on the whole test set and on each partition. An empty
/// partition scores 0 with n = 0. Throws CoverageError listing ids when a
/// test document has no prediction, several predictions, or a prediction
/// names an unknown id.
EvaluationReport evaluate(const std::vector<Prediction>& predictions, const Corpus& test,
                          const PartitionSet& partitions);

std::string evaluation_markdown(const EvaluationReport& report, const std::string& title);
std::string evaluation_csv(const EvaluationReport& report);

struct ComparisonRow {
  std::string label;
  EvaluationReport report;
  /// Delta of this report minus delta of the first report.
  double delta_change = 0.0;
  /// (first delta - this delta) / first delta, when the first delta is
  /// positive; 0 otherwise.
  double relative_reduction = 0.0;
  bool reduced = false;

  std::string flag() const;  // "reduced by 50.1%" or ""
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  std::string markdown() const;
  std::string csv() const;
};

/// Side-by-side comparison against the first report; rows whose Gap-Reverse
/// difference shrank are flagged. Throws ConfigError with fewer than two
/// reports.
ComparisonTable compare(const std::vector<std::pair<std::string, EvaluationReport>>& reports);

}  // namespace lenbias
