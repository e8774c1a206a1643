#include "lenbias/cli.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lenbias/analysis.hpp"
#include "lenbias/augmentation.hpp"
#include "lenbias/baselines.hpp"
#include "lenbias/error.hpp"
#include "lenbias/evaluation.hpp"
#include "lenbias/experiment.hpp"
#include "lenbias/injection.hpp"
#include "lenbias/io.hpp"
#include "lenbias/partition.hpp"
#include "lenbias/random.hpp"
#include "lenbias/synthetic.hpp"

namespace lenbias {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string pretty(const ojson& j) { return j.dump(2) + "\n"; }

std::string points(double pct) { return format_percent(pct / 100.0, 2) + "%"; }

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// key = value lines; '#' starts a comment. Keys are long flag names without
// the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const fs::path& path) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Option values as recorded in every meta sidecar.
ojson option_values(const CLI::App& sub) {
  ojson values = ojson::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    if (opt->get_expected_min() == 0) {
      values[name] = opt->count() > 0 && opt->as<bool>();
    } else if (opt->count() > 0) {
      const auto& results = opt->results();
      values[name] = results.size() == 1 && opt->get_expected_max() <= 1 ? ojson(results.front()) : ojson(results);
    } else {
      const std::string def = opt->get_default_str();
      values[name] = def.empty() ? ojson(nullptr) : ojson(def);
    }
  }
  return values;
}

struct Context {
  CLI::App* sub = nullptr;
  std::ostream* out = nullptr;
  std::optional<std::uint64_t> seed;

  void write_meta(const fs::path& artifact) const {
    ojson meta;
    meta["tool"] = std::string("lenbias ") + kToolVersion;
    meta["command"] = sub->get_name();
    meta["seed"] = seed ? ojson(*seed) : ojson(nullptr);
    meta["config"] = option_values(*sub);
    write_file_atomic(fs::path(artifact.string() + ".meta.json"), pretty(meta));
  }
};

struct Common {
  std::string tokenizer = "whitespace";
  TokenizerMode mode() const { return parse_tokenizer_mode(tokenizer); }
};

void add_tokenizer(CLI::App* sub, Common& common) {
  sub->add_option("--tokenizer", common.tokenizer, "whitespace (recount) or external (trust token_count)")
      ->capture_default_str();
}

ojson profile_json(const LengthProfile& profile, const SplitPoint& split) {
  ojson classes = ojson::object();
  for (const auto& [label, stats] : profile.per_class) {
    classes[std::to_string(label)] = {{"role", label == profile.short_label ? "short" : "long"},
                                      {"n", stats.n},
                                      {"mean", stats.mean},
                                      {"median", stats.median}};
  }
  return {{"short_class", profile.short_label},
          {"long_class", profile.long_label},
          {"overlap_pct", profile.overlap_pct},
          {"classes", classes},
          {"split", {{"threshold", split.threshold}, {"macro_f1", split.f1}, {"rule", SplitPoint::kRule}}}};
}

using Runner = std::function<void(Context&)>;

Runner setup_analyze(CLI::App* sub) {
  struct Opts {
    Common common;
    std::string in;
    std::string out_dir = "analysis";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--in", o->in, "corpus JSONL")->required();
  sub->add_option("--out-dir", o->out_dir, "report directory")->capture_default_str();
  add_tokenizer(sub, o->common);
  return [o](Context& ctx) {
    const Corpus corpus = load_corpus(o->in, o->common.mode());
    const LengthProfile profile = compute_profile(corpus);
    const SplitPoint split = optimal_split(corpus, profile);
    const fs::path dir = o->out_dir;
    write_file_atomic(dir / "profile.md", profile_markdown(profile, split, corpus.provenance()));
    write_file_atomic(dir / "profile.csv", profile_csv(profile, split));
    write_file_atomic(dir / "histogram.csv", histogram_csv(profile));
    write_file_atomic(dir / "profile.json", pretty(profile_json(profile, split)));
    ctx.write_meta(dir / "profile.json");
    *ctx.out << "overlap " << points(profile.overlap_pct) << ", split t=" << split.threshold
             << " macro F1 " << format_percent(split.f1, 2) << "% -> " << dir.string() << "\n";
  };
}

Runner setup_inject(CLI::App* sub) {
  struct Opts {
    Common common;
    std::string in;
    std::string out;
    std::optional<Length> lower;
    std::optional<Length> upper;
    std::optional<double> target;
    std::string policy = "closest";
    double tolerance = 5.0;
    double resolution = 1.0;
    bool anchor_split = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--in", o->in, "corpus JSONL")->required();
  sub->add_option("--out", o->out, "altered corpus JSONL")->required();
  auto* lower = sub->add_option("--lower", o->lower, "long class keeps len >= lower");
  auto* upper = sub->add_option("--upper", o->upper, "short class keeps len <= upper");
  auto* target = sub->add_option("--target-overlap", o->target, "search thresholds for this overlap (percent)");
  target->excludes(lower)->excludes(upper);
  sub->add_option("--policy", o->policy, "threshold search: closest or balanced")->capture_default_str();
  sub->add_option("--tolerance", o->tolerance, "largest accepted miss, in points")->capture_default_str();
  sub->add_option("--resolution", o->resolution, "balanced policy band, in points")->capture_default_str();
  sub->add_flag("--anchor-split", o->anchor_split, "kept lengths must straddle the optimal split point");
  add_tokenizer(sub, o->common);
  return [o](Context& ctx) {
    const Corpus corpus = load_corpus(o->in, o->common.mode());
    const LengthProfile profile = compute_profile(corpus);
    Length lo = o->lower.value_or(0);
    Length hi = o->upper.value_or(kUnbounded);
    if (o->target) {
      ThresholdSearch search;
      search.policy = parse_threshold_policy(o->policy);
      search.tolerance = o->tolerance;
      search.resolution = o->resolution;
      if (o->anchor_split) search.anchor = optimal_split(corpus, profile).threshold;
      const InjectionSpec found = thresholds_for_overlap(corpus, profile, *o->target, search);
      lo = found.lower;
      hi = found.upper;
    } else if (!o->lower && !o->upper) {
      throw ConfigError("inject needs --target-overlap or at least one of --lower/--upper");
    }
    auto [altered, spec] = alter_training_set(corpus, profile, lo, hi);
    spec.target_overlap = o->target;
    save_corpus(altered, o->out);
    const fs::path spec_path = o->out + ".spec.json";
    write_file_atomic(spec_path, pretty(to_json(spec)));
    ctx.write_meta(o->out);
    *ctx.out << "L=" << spec.lower << " U=" << (spec.upper == kUnbounded ? std::string("inf") : std::to_string(spec.upper))
             << " overlap " << points(spec.original_overlap) << " -> " << points(spec.achieved_overlap)
             << ", kept " << spec.total_retained() << " of " << corpus.size() << "\n";
  };
}

Runner setup_filter_window(CLI::App* sub) {
  struct Opts {
    Common common;
    std::string in;
    std::string out;
    Length lower = 0;
    Length upper = 0;
    bool match = false;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--in", o->in, "corpus JSONL")->required();
  sub->add_option("--out", o->out, "filtered corpus JSONL")->required();
  sub->add_option("--lower", o->lower, "smallest kept length")->required();
  sub->add_option("--upper", o->upper, "largest kept length")->required();
  sub->add_flag("--match-lengths", o->match, "keep equally many documents of each class at every length");
  sub->add_option("--seed", o->seed, "seed for --match-lengths")->capture_default_str();
  add_tokenizer(sub, o->common);
  return [o](Context& ctx) {
    ctx.seed = o->seed;
    const Corpus corpus = load_corpus(o->in, o->common.mode());
    const WindowResult window =
        filter_overlap_window(corpus, o->lower, o->upper, o->match ? std::optional(o->seed) : std::nullopt);
    save_corpus(window.corpus, o->out);
    write_file_atomic(o->out + ".window.json", pretty(to_json(window)));
    ctx.write_meta(o->out);
    *ctx.out << "window [" << o->lower << ", " << o->upper << "] overlap " << points(window.overlap_before)
             << " -> " << points(window.overlap_after) << ", kept " << window.corpus.size() << "\n";
  };
}

Runner setup_partition(CLI::App* sub) {
  struct Opts {
    Common common;
    std::string train;
    std::string test;
    std::string out_dir = "partitions";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--train", o->train, "training corpus the split is derived from")->required();
  sub->add_option("--test", o->test, "test corpus to partition")->required();
  sub->add_option("--out-dir", o->out_dir, "output directory")->capture_default_str();
  add_tokenizer(sub, o->common);
  return [o](Context& ctx) {
    const Corpus train = load_corpus(o->train, o->common.mode());
    const Corpus test = load_corpus(o->test, o->common.mode());
    const LengthProfile profile = compute_profile(train);
    const SplitPoint split = optimal_split(train, profile);
    const PartitionSet parts = make_partitions(test, split, profile);
    const fs::path dir = o->out_dir;
    save_corpus(test, dir / "original-test.jsonl");
    save_corpus(subset(test, parts.gap_ids, test.provenance() + " | gap-test"), dir / "gap-test.jsonl");
    save_corpus(subset(test, parts.reverse_ids, test.provenance() + " | reverse-test"), dir / "reverse-test.jsonl");
    write_file_atomic(dir / "partition.json", pretty(partition_summary(parts, test)));
    ctx.write_meta(dir / "partition.json");
    *ctx.out << "split t=" << split.threshold << ": gap " << parts.gap_ids.size() << ", reverse "
             << parts.reverse_ids.size() << " -> " << dir.string() << "\n";
  };
}

Runner setup_augment(CLI::App* sub) {
  struct Opts {
    Common common;
    std::string in;
    std::string out;
    AugmentConfig cfg;
    std::string backend = "dummy";
    std::string endpoint;
    std::string fill_word = "the";
    HttpFillBackend::Options http;
    std::string plans;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--in", o->in, "corpus JSONL")->required();
  sub->add_option("--out", o->out, "augmented corpus JSONL")->required();
  sub->add_option("--q", o->cfg.q, "Binomial parameter of the mask count")->capture_default_str();
  sub->add_option("--fraction", o->cfg.fraction, "share of each class to augment")->capture_default_str();
  sub->add_option("--mask-token", o->cfg.mask_token, "mask placeholder")->capture_default_str();
  sub->add_option("--seed", o->cfg.seed, "root seed")->capture_default_str();
  sub->add_flag("--replace", o->cfg.replace, "put synthetics in place of their sources");
  sub->add_option("--backend", o->backend, "dummy or http")->capture_default_str();
  sub->add_option("--endpoint", o->endpoint, "fill service URL for --backend http");
  sub->add_option("--fill-word", o->fill_word, "word the dummy backend substitutes")->capture_default_str();
  sub->add_option("--batch-size", o->http.batch_size, "texts per fill request")->capture_default_str();
  sub->add_option("--attempts", o->http.attempts, "tries per request")->capture_default_str();
  sub->add_option("--timeout", o->http.timeout_seconds, "seconds per request")->capture_default_str();
  sub->add_option("--plans", o->plans, "masked-plan JSONL (default: <out>.plans.jsonl)");
  add_tokenizer(sub, o->common);
  return [o](Context& ctx) {
    ctx.seed = o->cfg.seed;
    const Corpus corpus = load_corpus(o->in, o->common.mode());
    const LengthProfile profile = compute_profile(corpus);
    std::unique_ptr<FillBackend> backend;
    if (o->backend == "dummy") {
      backend = std::make_unique<DummyFillBackend>(o->fill_word);
    } else if (o->backend == "http") {
      if (o->endpoint.empty()) throw ConfigError("--backend http needs --endpoint");
      backend = std::make_unique<HttpFillBackend>(o->endpoint, o->http);
    } else {
      throw ConfigError("unknown backend '" + o->backend + "' (expected dummy, http)");
    }
    const AugmentResult result = augment_corpus(corpus, profile, o->cfg, *backend);
    save_corpus(result.corpus, o->out);
    std::string plans;
    for (const auto& plan : result.plans) plans += to_json(plan).dump() + "\n";
    write_file_atomic(o->plans.empty() ? o->out + ".plans.jsonl" : o->plans, plans);
    write_file_atomic(o->out + ".augment.json", pretty(to_json(result.report)));
    ctx.write_meta(o->out);
    for (const auto& w : result.report.warnings) *ctx.out << "warning: " << w << "\n";
    *ctx.out << "extended " << result.report.extended << ", reduced " << result.report.reduced << "; overlap "
             << points(result.report.overlap_before) << " -> " << points(result.report.overlap_after)
             << "\n";
  };
}

void add_hyper(CLI::App* sub, TrainHyper& h) {
  sub->add_option("--epochs", h.epochs, "passes over the training set")->capture_default_str();
  sub->add_option("--learning-rate", h.learning_rate, "gradient step size")->capture_default_str();
  sub->add_option("--batch-size", h.batch_size, "documents per step")->capture_default_str();
  sub->add_option("--hash-dim", h.hash_dim, "hashed unigram columns")->capture_default_str();
  sub->add_option("--l2", h.l2, "L2 penalty on the weights")->capture_default_str();
  sub->add_option("--bag-scale", h.bag_scale, "total bag feature mass per document")->capture_default_str();
  sub->add_option("--seed", h.seed, "shuffle seed")->capture_default_str();
}

Runner setup_train(CLI::App* sub) {
  struct Opts {
    Common common;
    std::string in;
    std::string model;
    std::string features = "length,bag";
    TrainHyper hyper;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--in", o->in, "training corpus JSONL")->required();
  sub->add_option("--model", o->model, "model JSON to write")->required();
  sub->add_option("--features", o->features, "comma list of length, bag")->capture_default_str();
  add_hyper(sub, o->hyper);
  add_tokenizer(sub, o->common);
  return [o](Context& ctx) {
    ctx.seed = o->hyper.seed;
    const Corpus corpus = load_corpus(o->in, o->common.mode());
    const LinearModel model = train_linear(corpus, parse_feature_config(o->features), o->hyper);
    write_file_atomic(o->model, pretty(to_json(model)));
    ctx.write_meta(o->model);
    *ctx.out << "trained " << to_string(model.features) << " on " << corpus.size() << " docs; length weight "
             << format_double(model.length_weight()) << "\n";
  };
}

Runner setup_predict(CLI::App* sub) {
  struct Opts {
    Common common;
    std::string model;
    std::string split;
    std::string in;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  auto* model = sub->add_option("--model", o->model, "model JSON");
  auto* split = sub->add_option("--length-split", o->split, "partition.json; predict with its length threshold");
  model->excludes(split);
  sub->add_option("--in", o->in, "corpus JSONL")->required();
  sub->add_option("--out", o->out, "predictions CSV")->required();
  add_tokenizer(sub, o->common);
  return [o](Context& ctx) {
    const Corpus corpus = load_corpus(o->in, o->common.mode());
    std::vector<Prediction> predictions;
    if (!o->model.empty()) {
      const LinearModel model = linear_model_from_json(nlohmann::json::parse(read_file(o->model)));
      for (Label label : corpus.labels()) {
        if (label != model.negative_label && label != model.positive_label) {
          throw ArityError("corpus label " + std::to_string(label) + " is unknown to the model");
        }
      }
      predictions = predict(model, corpus);
    } else if (!o->split.empty()) {
      predictions = length_threshold_predict(partition_from_json(nlohmann::json::parse(read_file(o->split))).split, corpus);
    } else {
      throw ConfigError("predict needs --model or --length-split");
    }
    write_file_atomic(o->out, predictions_csv(predictions));
    ctx.write_meta(o->out);
    *ctx.out << predictions.size() << " predictions -> " << o->out << "\n";
  };
}

Runner setup_evaluate(CLI::App* sub) {
  struct Opts {
    Common common;
    std::string predictions;
    std::string test;
    std::string partition;
    std::string out_dir = "evaluation";
    std::string title = "Evaluation";
    std::string train_provenance;
    double train_overlap = 0.0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--predictions", o->predictions, "predictions CSV")->required();
  sub->add_option("--test", o->test, "original test corpus JSONL")->required();
  sub->add_option("--partition", o->partition, "partition.json from the partition command")->required();
  sub->add_option("--out-dir", o->out_dir, "report directory")->capture_default_str();
  sub->add_option("--title", o->title, "report title")->capture_default_str();
  sub->add_option("--train-provenance", o->train_provenance, "recorded in the report");
  sub->add_option("--train-overlap", o->train_overlap, "training overlap, recorded in the report");
  add_tokenizer(sub, o->common);
  return [o](Context& ctx) {
    const Corpus test = load_corpus(o->test, o->common.mode());
    const auto predictions = parse_predictions_csv(read_file(o->predictions));
    const PartitionSet parts = partition_from_json(nlohmann::json::parse(read_file(o->partition)));
    EvaluationReport report = evaluate(predictions, test, parts);
    report.train_provenance = o->train_provenance;
    report.train_overlap = o->train_overlap;
    const fs::path dir = o->out_dir;
    write_file_atomic(dir / "report.json", pretty(to_json(report)));
    write_file_atomic(dir / "report.md", evaluation_markdown(report, o->title));
    write_file_atomic(dir / "report.csv", evaluation_csv(report));
    ctx.write_meta(dir / "report.json");
    *ctx.out << "original " << format_percent(report.accuracy_original) << "%, gap "
             << format_percent(report.accuracy_gap) << "%, reverse " << format_percent(report.accuracy_reverse)
             << "%, delta " << format_percent(report.delta_gap_reverse) << "\n";
  };
}

Runner setup_compare(CLI::App* sub) {
  struct Opts {
    std::vector<std::string> reports;
    std::vector<std::string> labels;
    std::string out_dir = "comparison";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--report", o->reports, "report JSON (repeat; the first is the reference)")->required();
  sub->add_option("--label", o->labels, "column label per report (repeat)");
  sub->add_option("--out-dir", o->out_dir, "output directory")->capture_default_str();
  return [o](Context& ctx) {
    if (!o->labels.empty() && o->labels.size() != o->reports.size())
      throw ConfigError("give one --label per --report");
    std::vector<std::pair<std::string, EvaluationReport>> reports;
    for (std::size_t i = 0; i < o->reports.size(); ++i) {
      const std::string label = o->labels.empty() ? fs::path(o->reports[i]).parent_path().filename().string() : o->labels[i];
      reports.emplace_back(label.empty() ? o->reports[i] : label,
                           evaluation_report_from_json(nlohmann::json::parse(read_file(o->reports[i]))));
    }
    const ComparisonTable table = compare(reports);
    const fs::path dir = o->out_dir;
    write_file_atomic(dir / "comparison.md", table.markdown());
    write_file_atomic(dir / "comparison.csv", table.csv());
    ctx.write_meta(dir / "comparison.csv");
    *ctx.out << table.markdown();
  };
}

void add_synthetic(CLI::App* sub, SyntheticConfig& c) {
  sub->add_option("--n-docs", c.n_docs, "documents, alternating classes")->capture_default_str();
  sub->add_option("--short-label", c.short_label, "label of the short class")->capture_default_str();
  sub->add_option("--long-label", c.long_label, "label of the long class")->capture_default_str();
  sub->add_option("--short-median", c.short_median, "median length of the short class")->capture_default_str();
  sub->add_option("--long-median", c.long_median, "median length of the long class")->capture_default_str();
  sub->add_option("--sigma", c.sigma, "log-normal spread of lengths")->capture_default_str();
  sub->add_option("--min-length", c.min_length, "shortest document")->capture_default_str();
  sub->add_option("--max-length", c.max_length, "longest document")->capture_default_str();
  sub->add_option("--signal", c.signal, "probability that a token is a class cue")->capture_default_str();
  sub->add_option("--cue-vocab", c.cue_vocab, "cue words per class")->capture_default_str();
  sub->add_option("--neutral-vocab", c.neutral_vocab, "shared neutral words")->capture_default_str();
  sub->add_option("--id-prefix", c.id_prefix, "document id prefix")->capture_default_str();
}

Runner setup_gen_synthetic(CLI::App* sub) {
  struct Opts {
    SyntheticConfig cfg;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--out", o->out, "corpus JSONL to write")->required();
  sub->add_option("--seed", o->cfg.seed, "generator seed")->capture_default_str();
  add_synthetic(sub, o->cfg);
  return [o](Context& ctx) {
    ctx.seed = o->cfg.seed;
    const Corpus corpus = generate_synthetic(o->cfg);
    save_corpus(corpus, o->out);
    ctx.write_meta(o->out);
    *ctx.out << corpus.size() << " documents -> " << o->out << "\n";
  };
}

Runner setup_experiment(CLI::App* sub) {
  struct Opts {
    Common common;
    ExperimentConfig cfg;
    std::string train;
    std::string test;
    std::string out_dir = "experiment";
    std::string policy = "balanced";
    bool no_few_shot = false;
    bool no_augment = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--out-dir", o->out_dir, "artifact directory")->capture_default_str();
  sub->add_option("--seed", o->cfg.seed, "root seed")->capture_default_str();
  sub->add_option("--train", o->train, "real training corpus (with --test)");
  sub->add_option("--test", o->test, "real test corpus (with --train)");
  sub->add_option("--targets", o->cfg.targets, "overlap targets in percent")->delimiter(',')->capture_default_str();
  sub->add_option("--policy", o->policy, "threshold search: closest or balanced")->capture_default_str();
  sub->add_option("--tolerance", o->cfg.search.tolerance, "largest accepted miss, in points")->capture_default_str();
  sub->add_option("--resolution", o->cfg.search.resolution, "balanced policy band")->capture_default_str();
  sub->add_option("--test-docs", o->cfg.synthetic_test_docs, "synthetic test documents")->capture_default_str();
  sub->add_flag("--no-few-shot", o->no_few_shot, "skip the length-matched window runs");
  sub->add_flag("--no-augment", o->no_augment, "skip the augmentation runs");
  sub->add_option("--q", o->cfg.augment_config.q, "Binomial parameter of the mask count")->capture_default_str();
  sub->add_option("--fraction", o->cfg.augment_config.fraction, "share of each class to augment")
      ->capture_default_str();
  sub->add_option("--fill-word", o->cfg.fill_word, "dummy backend word")->capture_default_str();
  sub->add_option("--endpoint", o->cfg.fill_endpoint, "fill service URL; dummy backend when empty");
  sub->add_option("--jobs", o->cfg.jobs, "scenarios run at once (0: all cores)")->capture_default_str();
  sub->add_option("--epochs", o->cfg.hyper.epochs, "passes over the training set")->capture_default_str();
  sub->add_option("--learning-rate", o->cfg.hyper.learning_rate, "gradient step size")->capture_default_str();
  sub->add_option("--batch-size", o->cfg.hyper.batch_size, "documents per step")->capture_default_str();
  sub->add_option("--hash-dim", o->cfg.hyper.hash_dim, "hashed unigram columns")->capture_default_str();
  sub->add_option("--l2", o->cfg.hyper.l2, "L2 penalty on the weights")->capture_default_str();
  sub->add_option("--bag-scale", o->cfg.hyper.bag_scale, "total bag feature mass")->capture_default_str();
  add_synthetic(sub, o->cfg.synthetic);
  add_tokenizer(sub, o->common);
  return [o](Context& ctx) {
    ExperimentConfig cfg = o->cfg;
    ctx.seed = cfg.seed;
    if (!o->train.empty()) cfg.train_path = o->train;
    if (!o->test.empty()) cfg.test_path = o->test;
    cfg.tokenizer = o->common.mode();
    cfg.search.policy = parse_threshold_policy(o->policy);
    cfg.few_shot = !o->no_few_shot;
    cfg.augment = !o->no_augment;
    const ExperimentResult result = run_experiment(cfg, o->out_dir, ctx.out);
    ctx.write_meta(fs::path(o->out_dir) / "summary.json");
    *ctx.out << "\n" << summary_markdown(result);
  };
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  ojson j;
  j["error"] = {{"kind", kind}, {"message", message}};
  err << j.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detect, inject, measure and mitigate sequence length bias in two-class text corpora", "lenbias"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::pair<std::string, Runner (*)(CLI::App*)>>> commands{
      {"analyze", {"class length profiles, overlap and optimal split", setup_analyze}},
      {"inject", {"drop documents to reach a length overlap", setup_inject}},
      {"filter-window", {"keep one length window, optionally length-matched", setup_filter_window}},
      {"partition", {"split a test set into Gap-test and Reverse-test", setup_partition}},
      {"augment", {"add mask-filled extensions and reductions", setup_augment}},
      {"train-baseline", {"train the logistic baseline", setup_train}},
      {"predict", {"score a corpus with a model or the length split", setup_predict}},
      {"evaluate", {"accuracy on original, Gap and Reverse tests", setup_evaluate}},
      {"compare", {"side-by-side Gap-Reverse comparison of reports", setup_compare}},
      {"experiment", {"full desk-scale reproduction", setup_experiment}},
      {"gen-synthetic", {"generate a synthetic two-class corpus", setup_gen_synthetic}},
  };
  std::map<std::string, std::pair<CLI::App*, Runner>> subs;
  std::string config_path;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "key = value file; command-line flags win");
    subs[name] = {sub, entry.second(sub)};
  }

  try {
    std::vector<std::string> argv = args;
    const auto chosen = std::find_if(argv.begin(), argv.end(), [&](const std::string& a) { return subs.contains(a); });
    for (std::size_t i = 0; i < argv.size(); ++i) {
      if (argv[i] == "--config" && i + 1 < argv.size()) config_path = argv[i + 1];
      else if (argv[i].rfind("--config=", 0) == 0) config_path = argv[i].substr(9);
    }
    if (!config_path.empty() && chosen != argv.end()) {
      CLI::App* sub = subs.at(*chosen).first;
      for (const auto& [key, value] : read_config_file(config_path)) {
        if (key == "config" || sub->get_option_no_throw("--" + key) == nullptr) {
          throw ConfigError("config key '" + key + "' is not an option of " + *chosen);
        }
        if (given_on_command_line(argv, "--" + key)) continue;
        const CLI::Option* opt = sub->get_option("--" + key);
        if (opt->get_items_expected_max() > 1) {
          argv.push_back("--" + key);
          std::istringstream items(value);
          for (std::string item; items >> item;) argv.push_back(item);
        } else {
          argv.push_back("--" + key + "=" + value);
        }
      }
    }
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return 2;
  } catch (const Error& e) {
    report_error(err, e.kind(), e.what());
    return 2;
  }

  for (auto& [name, entry] : subs) {
    auto& [sub, runner] = entry;
    if (!sub->parsed()) continue;
    Context ctx{sub, &out, std::nullopt};
    try {
      runner(ctx);
      return 0;
    } catch (const Error& e) {
      report_error(err, e.kind(), e.what());
    } catch (const nlohmann::json::exception& e) {
      report_error(err, "parse", e.what());
    } catch (const std::exception& e) {
      report_error(err, "internal", e.what());
    }
    return 1;
  }
  report_error(err, "usage", "no subcommand given");
  return 2;
}

}  // namespace lenbias
