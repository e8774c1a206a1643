// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "lenbias/analysis.hpp"
#include "lenbias/augmentation.hpp"
#include "lenbias/baselines.hpp"
#include "lenbias/cli.hpp"
#include "lenbias/error.hpp"
#include "lenbias/experiment.hpp"
#include "lenbias/injection.hpp"
#include "lenbias/io.hpp"
#include "lenbias/partition.hpp"
#include "lenbias/random.hpp"
#include "lenbias/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lenbias;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string num(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string pct(double fraction) { return num(100.0 * fraction, 1) + "%"; }

LengthHistogram random_histogram(Rng& rng) {
  LengthHistogram h;
  const std::size_t bins = 1 + rng.below(40);
  const Length base = rng.below(100);
  for (std::size_t i = 0; i < bins; ++i) h[base + rng.below(120)] += 1 + rng.below(500);
  return h;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file()) files[fs::relative(entry.path(), root).string()] = read_file(entry.path());
  return files;
}

Outcome overlap_oracle() {
  Outcome o;
  const auto start = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  bool self_exact = true;
  bool disjoint_exact = true;
  for (int i = 0; i < 1000; ++i) {
    const LengthHistogram a = random_histogram(rng);
    const LengthHistogram b = random_histogram(rng);
    worst = std::max(worst, std::abs(compute_overlap(a, b) - oracle::overlap(a, b)));
    self_exact = self_exact && compute_overlap(a, a) == 100.0;
    LengthHistogram shifted;
    const Length past = a.rbegin()->first + 1;
    for (const auto& [len, n] : b) shifted[past + len] = n;
    disjoint_exact = disjoint_exact && compute_overlap(a, shifted) == 0.0;
  }
  const double elapsed = seconds_since(start);
  o.require(worst <= 1e-9, "max error " + sci(worst));
  o.require(self_exact, "overlap(h,h) != 100");
  o.require(disjoint_exact, "disjoint overlap != 0");
  o.require(elapsed < 5.0, "runtime " + num(elapsed) + " s");
  o.detail = (o.pass ? "" : o.detail + " | ") + "1000 pairs, max |error| " + sci(worst) +
             ", h,h = 100 and disjoint = 0 exactly, " + num(elapsed, 3) + " s";
  return o;
}

Outcome split_oracle() {
  Outcome o;
  const auto start = Clock::now();
  Rng rng(77);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    std::vector<std::size_t> s, l;
    const std::size_t n = 2 + rng.below(199);
    const std::size_t shift = rng.below(30);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == 0 || (k > 1 && rng.bernoulli(0.5))) s.push_back(1 + rng.below(80));
      else l.push_back(1 + shift + rng.below(80));
    }
    const Corpus c = testing::corpus_of_lengths(s, l);
    const LengthProfile p = compute_profile(c);
    const SplitPoint got = optimal_split(c, p);
    const auto want = oracle::split(c, p.short_label);
    if (got.threshold != want.threshold || got.f1 != want.f1) ++mismatches;
  }
  const double elapsed = seconds_since(start);
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatches");
  o.require(elapsed < 10.0, "runtime " + num(elapsed) + " s");
  o.detail = (o.pass ? "" : o.detail + " | ") + "200 corpora, threshold and F1 identical, " + num(elapsed, 3) + " s";
  return o;
}

Outcome partition_identity(const fs::path& experiment_dir) {
  Outcome o;
  int checked = 0;
  auto check = [&](const Corpus& train, const Corpus& test) {
    const LengthProfile p = compute_profile(train);
    const SplitPoint split = optimal_split(train, p);
    const PartitionSet parts = make_partitions(test, split, p);
    const auto preds = length_threshold_predict(split, test);
    std::size_t gap_ok = 0, rev_ok = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool correct = preds[i].predicted_label == test.documents()[i].label;
      if (parts.gap_ids.contains(preds[i].doc_id)) gap_ok += correct;
      else rev_ok += correct;
    }
    o.require(gap_ok == parts.gap_ids.size(), "gap accuracy below 100% (run " + std::to_string(checked) + ")");
    o.require(rev_ok == 0, "reverse accuracy above 0% (run " + std::to_string(checked) + ")");
    ++checked;
  };
  check(load_corpus(experiment_dir / "data/train.jsonl", TokenizerMode::whitespace),
        load_corpus(experiment_dir / "data/test.jsonl", TokenizerMode::whitespace));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticConfig cfg;
    cfg.n_docs = 2000;
    cfg.seed = seed;
    cfg.short_median = 40.0 + double(seed);
    const Corpus train = generate_synthetic(cfg);
    cfg.seed = seed + 1000;
    cfg.id_prefix = "test";
    check(train, generate_synthetic(cfg));
  }
  o.detail = (o.pass ? "" : o.detail + " | ") + std::to_string(checked) + " partitions, Gap 100% and Reverse 0% each";
  return o;
}

Outcome bias_injection(const ExperimentResult& r, double elapsed) {
  Outcome o;
  const std::vector<std::string> order{"original", "80", "50", "25", "0"};
  std::string trace;
  const ScenarioResult* prev = nullptr;
  for (const auto& name : order) {
    const ScenarioResult* s = r.find(name);
    if (!s) {
      o.require(false, "missing scenario " + name);
      continue;
    }
    const auto& e = s->length_bag;
    trace += (trace.empty() ? "" : ", ") + name + ": " + pct(e.accuracy_gap) + "/" + pct(e.accuracy_reverse);
    if (prev) {
      o.require(e.accuracy_gap >= prev->length_bag.accuracy_gap - 0.02, "Gap drops at " + name);
      o.require(e.accuracy_reverse <= prev->length_bag.accuracy_reverse + 0.02, "Reverse rises at " + name);
    }
    prev = s;
  }
  if (const ScenarioResult* zero = r.find("0")) {
    o.require(zero->length_bag.accuracy_reverse <= 0.05, "Reverse at 0% is " + pct(zero->length_bag.accuracy_reverse));
    o.require(zero->length_bag.accuracy_gap >= 0.99, "Gap at 0% is " + pct(zero->length_bag.accuracy_gap));
  }
  if (const ScenarioResult* control = r.find("original")) {
    const double d = std::abs(control->length_bag.delta_gap_reverse);
    o.require(d <= 0.05, "control |Gap-Reverse| " + pct(d));
  }
  o.require(elapsed < 300.0, "runtime " + num(elapsed) + " s");
  o.detail = (o.pass ? "" : o.detail + " | ") + "Gap/Reverse " + trace + "; experiment " + num(elapsed, 1) + " s";
  return o;
}

Outcome few_shot(const ExperimentResult& r, const fs::path& experiment_dir) {
  Outcome o;
  const ScenarioResult* half = r.find("50");
  const ScenarioResult* zero = r.find("0");
  if (!half || !half->few_shot || !zero || !zero->few_shot) {
    o.require(false, "few-shot results missing");
    return o;
  }
  const FewShotResult& f = *half->few_shot;
  o.require(f.status == "ok", "50% window status " + f.status);
  o.require(f.overlap_after >= 99.0, "adjusted overlap " + num(f.overlap_after));
  double delta = 1.0;
  if (f.report) delta = std::abs(f.report->delta_gap_reverse);
  o.require(delta <= 0.05, "|Gap-Reverse| " + pct(delta));
  o.require(zero->few_shot->status == "n/a", "0% window status " + zero->few_shot->status);

  // The same window on the 0% set, called directly.
  const Corpus train = load_corpus(experiment_dir / "data/train.jsonl", TokenizerMode::whitespace);
  const LengthProfile p = compute_profile(train);
  auto [altered, spec] = alter_training_set(train, p, zero->injection.lower, zero->injection.upper);
  bool raised = false;
  try {
    filter_overlap_window(altered, spec.lower, spec.upper);
  } catch (const FilterError&) {
    raised = true;
  }
  o.require(raised, "0% window did not raise the empty-class error");
  o.detail = (o.pass ? "" : o.detail + " | ") + "50% window [" + std::to_string(f.lower) + ", " +
             std::to_string(f.upper) + "] overlap " + num(f.overlap_before) + " -> " + num(f.overlap_after) +
             ", " + std::to_string(f.size) + " docs, |Gap-Reverse| " + pct(delta) + "; 0% window: n/a (" +
             zero->few_shot->reason + ")";
  return o;
}

Outcome augmentation(const ExperimentResult& r, const fs::path& experiment_dir) {
  Outcome o;
  AugmentConfig cfg;  // q = 0.15
  const std::size_t m = 100;
  const Document doc = testing::make_doc("binomial", 1, m);
  double total = 0.0;
  for (std::uint64_t i = 0; i < 10000; ++i) total += double(plan_extension(doc, cfg, document_seed(i, doc.id))->k);
  const double mean = total / 10000.0;
  o.require(std::abs(mean - m * cfg.q) <= 0.05 * m * cfg.q, "Binomial mean " + num(mean, 3));

  const Corpus train = load_corpus(experiment_dir / "data/train.jsonl", TokenizerMode::whitespace);
  std::size_t plans = 0, bad_lengths = 0;
  for (const auto& d : train.documents()) {
    const auto plan = plan_reduction(d, cfg, document_seed(7, d.id));
    if (!plan) continue;
    ++plans;
    if (count_tokens(plan->masked_text) != d.token_count - plan->k) ++bad_lengths;
  }
  o.require(bad_lengths == 0, std::to_string(bad_lengths) + " reductions with length != m - r");

  const ScenarioResult* zero = r.find("0");
  if (!zero || !zero->augmentation) {
    o.require(false, "0% augmentation result missing");
    return o;
  }
  const AugmentationResult& a = *zero->augmentation;
  o.require(a.overlap_after > 0.0, "augmented overlap " + num(a.overlap_after));
  const double before = zero->length_bag.delta_gap_reverse;
  const double after = a.report.delta_gap_reverse;
  o.require(after < before, "Gap-Reverse " + pct(before) + " -> " + pct(after));
  o.detail = (o.pass ? "" : o.detail + " | ") + "mean k " + num(mean, 3) + " vs m*q " + num(m * cfg.q, 1) + "; " +
             std::to_string(plans) + " reductions all m - r; 0% set overlap " + num(a.overlap_before) + " -> " +
             num(a.overlap_after) + ", Gap-Reverse " + pct(before) + " -> " + pct(after);
  return o;
}

Outcome gradient_check() {
  Outcome o;
  SyntheticConfig cfg;
  cfg.n_docs = 80;
  cfg.signal = 0.3;
  cfg.cue_vocab = 5;
  cfg.neutral_vocab = 30;
  const Corpus c = generate_synthetic(cfg);
  const FeatureMatrix X = featurize(c, FeatureConfig{}, 48, LengthNormalization{80.0, 30.0, 3.0}, 10.0);
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y[i] = c.documents()[std::size_t(i)].label == 1 ? 1.0 : 0.0;
  Rng rng(31);
  double worst = 0.0;
  for (int round = 0; round < 5; ++round) {
    Eigen::VectorXd w(X.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = 0.5 * rng.normal();
    const double b = 0.5 * rng.normal();
    const double l2 = round % 2 ? 0.01 : 0.0;
    Eigen::VectorXd wb(w.size() + 1);
    wb << w, b;
    const auto loss = [&](const Eigen::VectorXd& v) {
      return logistic_loss(X, v.head(w.size()), v[w.size()], y, l2);
    };
    const LogisticGradient g = logistic_gradient(X, w, b, y, l2);
    Eigen::VectorXd analytic(wb.size());
    analytic << g.weights, g.bias;
    worst = std::max(worst, oracle::max_relative_error(analytic, oracle::numeric_gradient(loss, wb)));
  }
  o.require(worst < 1e-4, "max relative error " + sci(worst));
  o.detail = (o.pass ? "" : o.detail + " | ") + "5 weight vectors, max relative error " + sci(worst);
  return o;
}

}  // namespace

int main() {
  testing::TempDir scratch("acceptance");
  const fs::path run_dir = scratch / "run";
  const fs::path first_dir = scratch / "first";

  report("overlap oracle", overlap_oracle);
  report("split oracle", split_oracle);

  // Two identical CLI runs into the same path; the first is moved aside.
  std::ostringstream log, err;
  const std::vector<std::string> args{"experiment", "--seed", "0", "--out-dir", run_dir.string()};
  const auto start = Clock::now();
  const int first_status = run_cli(args, log, err);
  const double elapsed = seconds_since(start);
  if (first_status != 0) std::fprintf(stderr, "experiment failed: %s\n", err.str().c_str());
  fs::rename(run_dir, first_dir);
  const int second_status = run_cli(args, log, err);

  const auto first_files = snapshot(first_dir);
  const auto second_files = snapshot(run_dir);

  // Reloads the finished scenarios from their done markers.
  ExperimentConfig cfg;
  const ExperimentResult result = run_experiment(cfg, run_dir);
  bool resumed = true;
  for (const auto& s : result.scenarios) resumed = resumed && s.resumed;
  if (!resumed) std::fprintf(stderr, "note: scenarios were recomputed rather than reloaded\n");

  report("partition identity", [&] { return partition_identity(run_dir); });
  report("bias injection", [&] { return bias_injection(result, elapsed); });
  report("few-shot filter", [&] { return few_shot(result, run_dir); });
  report("augmentation", [&] { return augmentation(result, run_dir); });
  report("gradient check", gradient_check);
  report("determinism", [&] {
    Outcome o;
    o.require(first_status == 0 && second_status == 0, "experiment exit status");
    std::size_t differing = 0;
    for (const auto& [path, bytes] : first_files) {
      const auto it = second_files.find(path);
      if (it == second_files.end() || it->second != bytes) ++differing;
    }
    o.require(first_files.size() == second_files.size() && differing == 0, std::to_string(differing) + " files differ");
    o.detail = (o.pass ? "" : o.detail + " | ") + std::to_string(first_files.size()) +
               " artifacts byte-identical across two runs";
    return o;
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
