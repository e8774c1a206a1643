#include "lenbias/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <memory>
#include <sstream>
#include <thread>

#include "lenbias/error.hpp"
#include "lenbias/io.hpp"
#include "lenbias/partition.hpp"
#include "lenbias/random.hpp"

namespace lenbias {

namespace fs = std::filesystem;

namespace {

constexpr const char* kDoneMarker = "done.json";

std::string pretty(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

nlohmann::ordered_json hyper_json(const TrainHyper& h) {
  return {{"epochs", h.epochs},     {"learning_rate", h.learning_rate}, {"batch_size", h.batch_size},
          {"seed", h.seed},         {"hash_dim", h.hash_dim},           {"l2", h.l2},
          {"bag_scale", h.bag_scale}};
}

std::unique_ptr<FillBackend> make_backend(const ExperimentConfig& config) {
  if (config.fill_endpoint.empty()) return std::make_unique<DummyFillBackend>(config.fill_word);
  return std::make_unique<HttpFillBackend>(config.fill_endpoint);
}

struct Shared {
  const ExperimentConfig* config = nullptr;
  Corpus train;
  Corpus test;
  LengthProfile profile;
  SplitPoint split;
  PartitionSet partitions;
  std::string fingerprint;
};

EvaluationReport train_and_evaluate(const Shared& shared, const Corpus& train, FeatureConfig features,
                                    double train_overlap, const fs::path& dir, const std::string& stem) {
  TrainHyper hyper = shared.config->hyper;
  hyper.seed = derive_seed(shared.config->seed, "train");
  const LinearModel model = train_linear(train, features, hyper);
  const auto predictions = predict(model, shared.test);
  EvaluationReport report = evaluate(predictions, shared.test, shared.partitions);
  report.train_provenance = train.provenance();
  report.train_overlap = train_overlap;
  write_file_atomic(dir / ("model-" + stem + ".json"), pretty(to_json(model)));
  write_file_atomic(dir / ("predictions-" + stem + ".csv"), predictions_csv(predictions));
  write_file_atomic(dir / ("report-" + stem + ".json"), pretty(to_json(report)));
  return report;
}

FewShotResult run_few_shot(const Shared& shared, const Corpus& altered, const InjectionSpec& spec,
                           const std::string& name, const fs::path& dir) {
  FewShotResult out;
  try {
    WindowResult window =
        filter_overlap_window(altered, spec.lower, spec.upper, derive_seed(shared.config->seed, "few-shot:" + name));
    out.status = "ok";
    out.lower = window.lower;
    out.upper = window.upper;
    out.overlap_before = window.overlap_before;
    out.overlap_after = window.overlap_after;
    out.size = window.corpus.size();
    write_file_atomic(dir / "window.json", pretty(to_json(window)));
    out.report = train_and_evaluate(shared, window.corpus, {true, true}, window.overlap_after, dir, "length-bag");
  } catch (const FilterError& e) {
    out.status = "n/a";
    out.reason = e.what();
  }
  return out;
}

ScenarioResult run_scenario(const Shared& shared, const std::string& name, std::optional<double> target,
                            const fs::path& dir) {
  const ExperimentConfig& config = *shared.config;
  ScenarioResult result;
  result.name = name;
  result.target = target;
  Length lower = 0;
  Length upper = kUnbounded;
  if (target) {
    ThresholdSearch search = config.search;
    search.anchor = shared.split.threshold;
    const InjectionSpec found = thresholds_for_overlap(shared.train, shared.profile, *target, search);
    lower = found.lower;
    upper = found.upper;
  }
  auto [altered, spec] = alter_training_set(shared.train, shared.profile, lower, upper);
  spec.target_overlap = target;
  result.injection = spec;
  write_file_atomic(dir / "injection.json", pretty(to_json(spec)));

  result.length_bag = train_and_evaluate(shared, altered, {true, true}, spec.achieved_overlap, dir, "length-bag");
  result.bag = train_and_evaluate(shared, altered, {false, true}, spec.achieved_overlap, dir, "bag");

  if (target && config.few_shot) result.few_shot = run_few_shot(shared, altered, spec, name, dir / "few-shot");

  if (target && config.augment) {
    AugmentConfig acfg = config.augment_config;
    acfg.seed = derive_seed(config.seed, "augment:" + name);
    const LengthProfile altered_profile = compute_profile(altered);
    auto backend = make_backend(config);
    AugmentResult augmented = augment_corpus(altered, altered_profile, acfg, *backend);
    const fs::path adir = dir / "augmented";
    write_file_atomic(adir / "augment.json", pretty(to_json(augmented.report)));
    AugmentationResult a;
    a.overlap_before = augmented.report.overlap_before;
    a.overlap_after = augmented.report.overlap_after;
    a.size = augmented.corpus.size();
    a.report = train_and_evaluate(shared, augmented.corpus, {true, true}, a.overlap_after, adir, "length-bag");
    const auto table = compare({{"unaugmented", result.length_bag}, {"augmented", a.report}});
    a.comparison = table.rows[1];
    write_file_atomic(adir / "comparison.md", table.markdown());
    write_file_atomic(adir / "comparison.csv", table.csv());
    result.augmentation = a;
  }

  write_file_atomic(dir / "result.json", pretty(to_json(result)));
  write_file_atomic(dir / kDoneMarker, shared.fingerprint);
  return result;
}

std::optional<ScenarioResult> try_resume(const Shared& shared, const fs::path& dir) {
  std::error_code ec;
  if (!fs::exists(dir / kDoneMarker, ec) || !fs::exists(dir / "result.json", ec)) return std::nullopt;
  if (read_file(dir / kDoneMarker) != shared.fingerprint) return std::nullopt;
  try {
    ScenarioResult r = scenario_result_from_json(nlohmann::json::parse(read_file(dir / "result.json")));
    r.resumed = true;
    return r;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

std::string pct(double fraction) { return format_percent(fraction) + " %"; }

std::string bound(Length value) { return value == kUnbounded ? std::string("-") : std::to_string(value); }

nlohmann::ordered_json optional_report(const std::optional<EvaluationReport>& r) {
  return r ? nlohmann::ordered_json(to_json(*r)) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["train_path"] = c.train_path ? nlohmann::ordered_json(c.train_path->string()) : nullptr;
  j["test_path"] = c.test_path ? nlohmann::ordered_json(c.test_path->string()) : nullptr;
  j["tokenizer"] = to_string(c.tokenizer);
  j["synthetic"] = to_json(c.synthetic);
  j["synthetic_test_docs"] = c.synthetic_test_docs;
  j["targets"] = c.targets;
  j["search"] = {{"policy", to_string(c.search.policy)},
                 {"tolerance", c.search.tolerance},
                 {"resolution", c.search.resolution},
                 {"anchor", "split"}};
  j["train"] = hyper_json(c.hyper);
  j["few_shot"] = {{"enabled", c.few_shot}, {"match_lengths", true}};
  j["augment"] = {{"enabled", c.augment},
                  {"q", c.augment_config.q},
                  {"mask_token", c.augment_config.mask_token},
                  {"fraction", c.augment_config.fraction},
                  {"replace", c.augment_config.replace},
                  {"backend", c.fill_endpoint.empty() ? "dummy" : "http"},
                  {"fill_word", c.fill_word},
                  {"endpoint", c.fill_endpoint}};
  j["seed"] = c.seed;
  return j;
}

nlohmann::ordered_json to_json(const ScenarioResult& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["target"] = r.target ? nlohmann::ordered_json(*r.target) : nullptr;
  j["injection"] = to_json(r.injection);
  j["length_bag"] = to_json(r.length_bag);
  j["bag"] = to_json(r.bag);
  if (r.few_shot) {
    const auto& f = *r.few_shot;
    j["few_shot"] = {{"status", f.status},         {"reason", f.reason},
                     {"lower", f.lower},           {"upper", f.upper},
                     {"overlap_before", f.overlap_before}, {"overlap_after", f.overlap_after},
                     {"size", f.size},             {"report", optional_report(f.report)}};
  } else {
    j["few_shot"] = nullptr;
  }
  if (r.augmentation) {
    const auto& a = *r.augmentation;
    j["augmentation"] = {{"overlap_before", a.overlap_before},
                         {"overlap_after", a.overlap_after},
                         {"size", a.size},
                         {"report", to_json(a.report)},
                         {"delta_change", a.comparison.delta_change},
                         {"relative_reduction", a.comparison.relative_reduction},
                         {"reduced", a.comparison.reduced}};
  } else {
    j["augmentation"] = nullptr;
  }
  return j;
}

ScenarioResult scenario_result_from_json(const nlohmann::json& j) {
  ScenarioResult r;
  r.name = j.at("name").get<std::string>();
  if (!j.at("target").is_null()) r.target = j.at("target").get<double>();
  r.injection = injection_spec_from_json(j.at("injection"));
  r.length_bag = evaluation_report_from_json(j.at("length_bag"));
  r.bag = evaluation_report_from_json(j.at("bag"));
  if (const auto& f = j.at("few_shot"); !f.is_null()) {
    FewShotResult out;
    out.status = f.at("status").get<std::string>();
    out.reason = f.at("reason").get<std::string>();
    out.lower = f.at("lower").get<Length>();
    out.upper = f.at("upper").get<Length>();
    out.overlap_before = f.at("overlap_before").get<double>();
    out.overlap_after = f.at("overlap_after").get<double>();
    out.size = f.at("size").get<std::size_t>();
    if (!f.at("report").is_null()) out.report = evaluation_report_from_json(f.at("report"));
    r.few_shot = out;
  }
  if (const auto& a = j.at("augmentation"); !a.is_null()) {
    AugmentationResult out;
    out.overlap_before = a.at("overlap_before").get<double>();
    out.overlap_after = a.at("overlap_after").get<double>();
    out.size = a.at("size").get<std::size_t>();
    out.report = evaluation_report_from_json(a.at("report"));
    out.comparison.label = "augmented";
    out.comparison.report = out.report;
    out.comparison.delta_change = a.at("delta_change").get<double>();
    out.comparison.relative_reduction = a.at("relative_reduction").get<double>();
    out.comparison.reduced = a.at("reduced").get<bool>();
    r.augmentation = out;
  }
  return r;
}

const ScenarioResult* ExperimentResult::find(const std::string& name) const {
  for (const auto& s : scenarios)
    if (s.name == name) return &s;
  return nullptr;
}

std::string scenario_directory(const std::string& name) {
  return name == "original" ? name : "overlap-" + name;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir, std::ostream* log) {
  if (config.train_path.has_value() != config.test_path.has_value())
    throw ConfigError("give both a training and a test corpus, or neither for a synthetic run");
  for (double t : config.targets)
    if (!std::isfinite(t) || t < 0.0 || t > 100.0) throw ConfigError("target overlap must lie in [0, 100]");
  if (config.augment) config.augment_config.validate();

  Shared shared;
  shared.config = &config;
  const nlohmann::ordered_json config_json = to_json(config);
  shared.fingerprint = pretty(config_json);
  write_file_atomic(out_dir / "config.json", shared.fingerprint);

  if (config.train_path) {
    shared.train = load_corpus(*config.train_path, config.tokenizer);
    shared.test = load_corpus(*config.test_path, config.tokenizer);
  } else {
    SyntheticConfig train_cfg = config.synthetic;
    train_cfg.seed = derive_seed(config.seed, "synthetic-train");
    SyntheticConfig test_cfg = config.synthetic;
    test_cfg.seed = derive_seed(config.seed, "synthetic-test");
    test_cfg.n_docs = config.synthetic_test_docs;
    test_cfg.id_prefix = config.synthetic.id_prefix + "-test";
    shared.train = generate_synthetic(train_cfg);
    shared.test = generate_synthetic(test_cfg);
    save_corpus(shared.train, out_dir / "data" / "train.jsonl");
    save_corpus(shared.test, out_dir / "data" / "test.jsonl");
  }
  shared.profile = compute_profile(shared.train);
  shared.split = optimal_split(shared.train, shared.profile);
  shared.partitions = make_partitions(shared.test, shared.split, shared.profile);
  write_file_atomic(out_dir / "profile.md", profile_markdown(shared.profile, shared.split, shared.train.provenance()));
  write_file_atomic(out_dir / "partition.json", pretty(partition_summary(shared.partitions, shared.test)));
  if (log) {
    *log << "train " << shared.train.size() << " docs, overlap " << format_double(shared.profile.overlap_pct)
         << "%, split t=" << shared.split.threshold << "; gap " << shared.partitions.gap_ids.size() << ", reverse "
         << shared.partitions.reverse_ids.size() << "\n";
  }

  std::vector<std::pair<std::string, std::optional<double>>> plan{{"original", std::nullopt}};
  for (double t : config.targets) plan.emplace_back(format_double(t), t);

  ExperimentResult result;
  result.profile = shared.profile;
  result.split = shared.split;
  result.n_gap = shared.partitions.gap_ids.size();
  result.n_reverse = shared.partitions.reverse_ids.size();
  result.scenarios.resize(plan.size());

  const std::size_t jobs =
      config.jobs ? config.jobs : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  std::vector<std::future<ScenarioResult>> running(plan.size());
  std::size_t next_to_collect = 0;
  auto collect = [&](std::size_t i) {
    result.scenarios[i] = running[i].get();
    if (log) *log << "scenario " << plan[i].first << (result.scenarios[i].resumed ? " (resumed)" : "") << " done\n";
  };
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (i >= next_to_collect + jobs) collect(next_to_collect++);
    const fs::path dir = out_dir / scenario_directory(plan[i].first);
    running[i] = std::async(std::launch::async, [&shared, dir, name = plan[i].first, target = plan[i].second] {
      if (auto resumed = try_resume(shared, dir)) return *resumed;
      return run_scenario(shared, name, target, dir);
    });
  }
  while (next_to_collect < plan.size()) collect(next_to_collect++);

  nlohmann::ordered_json summary;
  summary["config"] = config_json;
  summary["overlap"] = shared.profile.overlap_pct;
  summary["split"] = {{"threshold", shared.split.threshold}, {"macro_f1", shared.split.f1}};
  summary["partition"] = {{"gap", result.n_gap}, {"reverse", result.n_reverse}};
  nlohmann::ordered_json scenarios = nlohmann::ordered_json::array();
  for (const auto& s : result.scenarios) scenarios.push_back(to_json(s));
  summary["scenarios"] = scenarios;
  write_file_atomic(out_dir / "summary.json", pretty(summary));
  write_file_atomic(out_dir / "summary.md", summary_markdown(result));
  write_file_atomic(out_dir / "summary.csv", summary_csv(result));
  return result;
}

std::string scenario_table_markdown(const ExperimentResult& result) {
  std::ostringstream md;
  md << "| scenario | L | U | train overlap | train size | model | original test | gap test | reverse test | "
        "delta gap-reverse |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& s : result.scenarios) {
    for (const auto& [model, r] : {std::pair{"length+bag", &s.length_bag}, std::pair{"bag", &s.bag}}) {
      md << "| " << s.name << " | " << bound(s.injection.lower) << " | " << bound(s.injection.upper) << " | "
         << format_percent(s.injection.achieved_overlap / 100.0) << " % | " << s.injection.total_retained()
         << " | " << model << " | " << pct(r->accuracy_original) << " | " << pct(r->accuracy_gap) << " | "
         << pct(r->accuracy_reverse) << " | " << pct(r->delta_gap_reverse) << " |\n";
    }
  }
  return md.str();
}

std::string few_shot_table_markdown(const ExperimentResult& result) {
  std::ostringstream md;
  md << "| scenario | window | adjusted overlap | train size | original test | gap test | reverse test | "
        "delta gap-reverse |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& s : result.scenarios) {
    if (!s.few_shot) continue;
    const auto& f = *s.few_shot;
    if (!f.report) {
      md << "| " << s.name << " | n/a | n/a | n/a | n/a | n/a | n/a | n/a |\n";
      continue;
    }
    md << "| " << s.name << " | [" << f.lower << ", " << f.upper << "] | "
       << format_percent(f.overlap_after / 100.0) << " % | " << f.size << " | " << pct(f.report->accuracy_original)
       << " | " << pct(f.report->accuracy_gap) << " | " << pct(f.report->accuracy_reverse) << " | "
       << pct(f.report->delta_gap_reverse) << " |\n";
  }
  return md.str();
}

std::string augmentation_table_markdown(const ExperimentResult& result) {
  std::ostringstream md;
  md << "| scenario | overlap before | overlap after | original test | gap test | reverse test | delta before | "
        "delta after | mitigation |\n";
  md << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& s : result.scenarios) {
    if (!s.augmentation) continue;
    const auto& a = *s.augmentation;
    const std::string flag = a.comparison.flag();
    md << "| " << s.name << " | " << format_percent(a.overlap_before / 100.0) << " % | "
       << format_percent(a.overlap_after / 100.0) << " % | " << pct(a.report.accuracy_original) << " | "
       << pct(a.report.accuracy_gap) << " | " << pct(a.report.accuracy_reverse) << " | "
       << pct(s.length_bag.delta_gap_reverse) << " | " << pct(a.report.delta_gap_reverse) << " | "
       << (flag.empty() ? std::string("-") : flag) << " |\n";
  }
  return md.str();
}

std::string summary_markdown(const ExperimentResult& result) {
  std::ostringstream md;
  md << "# Sequence length bias experiment\n\n";
  md << "Training overlap " << format_percent(result.profile.overlap_pct / 100.0) << " %, split t = "
     << result.split.threshold << " (macro F1 " << format_double(std::round(result.split.f1 * 1e4) / 1e4)
     << "). Test partitions: gap " << result.n_gap << ", reverse " << result.n_reverse << ".\n\n";
  md << "## Overlap scenarios\n\n" << scenario_table_markdown(result) << "\n";
  bool any_few_shot = false;
  bool any_augmented = false;
  for (const auto& s : result.scenarios) {
    any_few_shot = any_few_shot || s.few_shot.has_value();
    any_augmented = any_augmented || s.augmentation.has_value();
  }
  if (any_few_shot) md << "## Few-shot overlap window\n\n" << few_shot_table_markdown(result) << "\n";
  if (any_augmented) md << "## Augmentation\n\n" << augmentation_table_markdown(result);
  return md.str();
}

std::string summary_csv(const ExperimentResult& result) {
  std::ostringstream csv;
  csv << "scenario,variant,lower,upper,train_overlap,train_size,accuracy_original,accuracy_gap,accuracy_reverse,"
         "delta_gap_reverse\n";
  auto row = [&](const std::string& scenario, const std::string& variant, const std::string& lower,
                 const std::string& upper, double overlap, std::size_t size, const EvaluationReport* r) {
    csv << scenario << ',' << variant << ',' << lower << ',' << upper << ',' << format_double(overlap) << ','
        << size << ',';
    if (r) {
      csv << format_double(r->accuracy_original) << ',' << format_double(r->accuracy_gap) << ','
          << format_double(r->accuracy_reverse) << ',' << format_double(r->delta_gap_reverse) << '\n';
    } else {
      csv << "n/a,n/a,n/a,n/a\n";
    }
  };
  for (const auto& s : result.scenarios) {
    const std::string lo = bound(s.injection.lower);
    const std::string hi = bound(s.injection.upper);
    const double ov = s.injection.achieved_overlap;
    const std::size_t n = s.injection.total_retained();
    row(s.name, "length+bag", lo, hi, ov, n, &s.length_bag);
    row(s.name, "bag", lo, hi, ov, n, &s.bag);
    if (s.few_shot) {
      const auto& f = *s.few_shot;
      const auto report = f.report ? &*f.report : nullptr;
      row(s.name, "few-shot", f.report ? std::to_string(f.lower) : "n/a", f.report ? std::to_string(f.upper) : "n/a",
          f.overlap_after, f.size, report);
    }
    if (s.augmentation) {
      const auto& a = *s.augmentation;
      row(s.name, "augmented", lo, hi, a.overlap_after, a.size, &a.report);
    }
  }
  return csv.str();
}

}  // namespace lenbias
