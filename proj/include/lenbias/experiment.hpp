#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lenbias/analysis.hpp"
#include "lenbias/augmentation.hpp"
#include "lenbias/baselines.hpp"
#include "lenbias/evaluation.hpp"
#include "lenbias/injection.hpp"
#include "lenbias/synthetic.hpp"

namespace lenbias {

/// Everything that determines an experiment's artifacts. With no corpus
/// paths a synthetic train/test pair is generated from `synthetic`.
struct ExperimentConfig {
  std::optional<std::filesystem::path> train_path;
  std::optional<std::filesystem::path> test_path;
  TokenizerMode tokenizer = TokenizerMode::whitespace;
  SyntheticConfig synthetic;
  std::size_t synthetic_test_docs = 10000;

  /// Target overlaps in percent; the unaltered corpus always runs first.
  std::vector<double> targets{80.0, 50.0, 25.0, 0.0};
  /// Balanced policy; the anchor is set to the training split threshold.
  ThresholdSearch search{ThresholdSearch::Policy::balanced, 5.0, 1.0, std::nullopt};

  TrainHyper hyper;

  /// Retrain on the scenario's [L, U] window, length-matched.
  bool few_shot = true;

  bool augment = true;
  AugmentConfig augment_config;
  std::string fill_word = "the";
  /// Fill service URL; empty selects the built-in dummy backend.
  std::string fill_endpoint;

  std::uint64_t seed = 0;
  /// Scenarios run in parallel up to this many at a time; 0 picks the
  /// hardware concurrency.
  std::size_t jobs = 0;
};

nlohmann::ordered_json to_json(const ExperimentConfig& config);

struct FewShotResult {
  /// "ok" or "n/a"; `reason` says why the window could not be trained on.
  std::string status = "n/a";
  std::string reason;
  Length lower = 0;
  Length upper = 0;
  double overlap_before = 0.0;
  double overlap_after = 0.0;
  std::size_t size = 0;
  std::optional<EvaluationReport> report;
};

struct AugmentationResult {
  double overlap_before = 0.0;
  double overlap_after = 0.0;
  std::size_t size = 0;
  EvaluationReport report;
  ComparisonRow comparison;
};

struct ScenarioResult {
  std::string name;  // "original" or the target, e.g. "50"
  std::optional<double> target;
  InjectionSpec injection;
  EvaluationReport length_bag;
  EvaluationReport bag;
  std::optional<FewShotResult> few_shot;
  std::optional<AugmentationResult> augmentation;
  bool resumed = false;
};

nlohmann::ordered_json to_json(const ScenarioResult& result);
ScenarioResult scenario_result_from_json(const nlohmann::json& j);

struct ExperimentResult {
  LengthProfile profile;
  SplitPoint split;
  std::size_t n_gap = 0;
  std::size_t n_reverse = 0;
  std::vector<ScenarioResult> scenarios;

  const ScenarioResult* find(const std::string& name) const;
};

/// Scenario directory name: "original" or "overlap-<target>".
std::string scenario_directory(const std::string& name);

/// Runs inject -> partition -> train -> evaluate for the unaltered corpus
/// and every target, plus the few-shot window and augmentation variants, and
/// writes all artifacts under `out_dir`. A scenario directory whose done
/// marker matches the current config is loaded instead of recomputed.
/// Artifacts depend only on the config, so reruns are byte-identical.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                std::ostream* log = nullptr);

/// Overlap scenarios (injection and accuracies of both baselines).
std::string scenario_table_markdown(const ExperimentResult& result);
/// Few-shot window rows; "n/a" where the window holds a single class.
std::string few_shot_table_markdown(const ExperimentResult& result);
/// Unaugmented against augmented accuracies per scenario.
std::string augmentation_table_markdown(const ExperimentResult& result);
std::string summary_markdown(const ExperimentResult& result);
std::string summary_csv(const ExperimentResult& result);

}  // namespace lenbias
