#include <doctest.h>

#include <sstream>

#include "lenbias/cli.hpp"
#include "lenbias/corpus.hpp"
#include "lenbias/injection.hpp"
#include "lenbias/io.hpp"
#include "support.hpp"

using namespace lenbias;
using lenbias::testing::TempDir;

namespace {

struct Run {
  int status = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.status = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(read_file(p)); }

std::string s(const std::filesystem::path& p) { return p.string(); }

struct Workspace {
  TempDir dir{"cli"};
  std::filesystem::path train = dir / "train.jsonl";
  std::filesystem::path test = dir / "test.jsonl";

  Workspace() {
    REQUIRE(cli({"gen-synthetic", "--out", s(train), "--n-docs", "3000", "--seed", "1"}).status == 0);
    REQUIRE(cli({"gen-synthetic", "--out", s(test), "--n-docs", "1000", "--seed", "2", "--id-prefix", "t"}).status == 0);
  }
};

}  // namespace

TEST_CASE("analyze writes the profile reports") {
  Workspace ws;
  const Run r = cli({"analyze", "--in", s(ws.train), "--out-dir", s(ws.dir / "analysis")});
  CHECK(r.status == 0);
  CHECK(r.out.find("overlap") != std::string::npos);
  for (const char* f : {"profile.md", "profile.csv", "histogram.csv", "profile.json", "profile.json.meta.json"})
    CHECK(std::filesystem::exists(ws.dir / "analysis" / f));
  const auto meta = read_json(ws.dir / "analysis/profile.json.meta.json");
  CHECK(meta["command"] == "analyze");
  CHECK(meta["config"]["in"] == s(ws.train));
}

TEST_CASE("inject then analyze lands on the target") {
  Workspace ws;
  const auto altered = ws.dir / "altered.jsonl";
  const Run r = cli({"inject", "--in", s(ws.train), "--out", s(altered), "--target-overlap", "50"});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("%%") == std::string::npos);
  CHECK(cli({"analyze", "--in", s(altered), "--out-dir", s(ws.dir / "a2")}).status == 0);
  const double overlap = read_json(ws.dir / "a2/profile.json")["overlap_pct"];
  CHECK(std::abs(overlap - 50.0) <= 5.0);
  const auto spec = read_json(s(altered) + ".spec.json");
  CHECK(spec["achieved_overlap"].get<double>() == overlap);
}

TEST_CASE("explicit thresholds and the anchored policy") {
  Workspace ws;
  const auto out = ws.dir / "cut.jsonl";
  REQUIRE(cli({"inject", "--in", s(ws.train), "--out", s(out), "--lower", "90"}).status == 0);
  const Corpus c = load_corpus(out, TokenizerMode::whitespace);
  for (const auto& d : c.documents())
    if (d.label == 0) CHECK(d.token_count >= 90);
  REQUIRE(cli({"inject", "--in", s(ws.train), "--out", s(out), "--target-overlap", "0", "--policy", "balanced",
               "--anchor-split"})
              .status == 0);
  const auto spec = read_json(s(out) + ".spec.json");
  CHECK(spec["achieved_overlap"] == 0.0);
  CHECK(spec["lower"].get<int>() == spec["upper"].get<int>() + 1);
  CHECK(cli({"inject", "--in", s(ws.train), "--out", s(out)}).status == 1);
}

TEST_CASE("partition, predict and evaluate with the length split") {
  Workspace ws;
  const auto parts = ws.dir / "parts";
  REQUIRE(cli({"partition", "--train", s(ws.train), "--test", s(ws.test), "--out-dir", s(parts)}).status == 0);
  for (const char* f : {"original-test.jsonl", "gap-test.jsonl", "reverse-test.jsonl", "partition.json"})
    CHECK(std::filesystem::exists(parts / f));
  const auto preds = ws.dir / "len.csv";
  REQUIRE(cli({"predict", "--length-split", s(parts / "partition.json"), "--in", s(ws.test), "--out", s(preds)})
              .status == 0);
  REQUIRE(cli({"evaluate", "--predictions", s(preds), "--test", s(ws.test), "--partition",
               s(parts / "partition.json"), "--out-dir", s(ws.dir / "eval")})
              .status == 0);
  const auto report = read_json(ws.dir / "eval/report.json");
  CHECK(report["accuracy_gap"] == 1.0);
  CHECK(report["accuracy_reverse"] == 0.0);
}

TEST_CASE("train, predict, augment and compare") {
  Workspace ws;
  const auto parts = ws.dir / "parts";
  REQUIRE(cli({"partition", "--train", s(ws.train), "--test", s(ws.test), "--out-dir", s(parts)}).status == 0);
  const auto zero = ws.dir / "zero.jsonl";
  REQUIRE(cli({"inject", "--in", s(ws.train), "--out", s(zero), "--target-overlap", "0", "--policy", "balanced",
               "--anchor-split"})
              .status == 0);
  const auto aug = ws.dir / "aug.jsonl";
  const Run a = cli({"augment", "--in", s(zero), "--out", s(aug), "--seed", "3"});
  REQUIRE(a.status == 0);
  CHECK(std::filesystem::exists(s(aug) + ".plans.jsonl"));
  CHECK(read_json(s(aug) + ".augment.json")["overlap_after"].get<double>() > 0.0);
  CHECK(read_json(s(aug) + ".meta.json")["seed"] == 3);

  std::vector<std::string> reports;
  for (const auto& [name, corpus] : {std::pair{"zero", zero}, std::pair{"aug", aug}}) {
    const auto model = ws.dir / (std::string(name) + ".model.json");
    const auto preds = ws.dir / (std::string(name) + ".csv");
    REQUIRE(cli({"train-baseline", "--in", s(corpus), "--model", s(model), "--hash-dim", "4096"}).status == 0);
    REQUIRE(cli({"predict", "--model", s(model), "--in", s(ws.test), "--out", s(preds)}).status == 0);
    const auto out = ws.dir / ("eval-" + std::string(name));
    REQUIRE(cli({"evaluate", "--predictions", s(preds), "--test", s(ws.test), "--partition",
                 s(parts / "partition.json"), "--out-dir", s(out)})
                .status == 0);
    reports.push_back(s(out / "report.json"));
  }
  const Run cmp = cli({"compare", "--report", reports[0], "--report", reports[1], "--label", "zero", "--label",
                       "augmented", "--out-dir", s(ws.dir / "cmp")});
  REQUIRE(cmp.status == 0);
  const std::string md = read_file(ws.dir / "cmp/comparison.md");
  CHECK(md.find("| metric | zero | augmented |") == 0);
  CHECK(md.find("reduced by") != std::string::npos);

  const auto conf = ws.dir / "compare.conf";
  write_file_atomic(conf, "report = " + reports[0] + " " + reports[1] + "\nlabel = zero augmented\n");
  REQUIRE(cli({"compare", "--config", s(conf), "--out-dir", s(ws.dir / "cmp-conf")}).status == 0);
  CHECK(read_file(ws.dir / "cmp-conf/comparison.md") == md);
}

TEST_CASE("filter-window with length matching") {
  Workspace ws;
  const auto out = ws.dir / "window.jsonl";
  REQUIRE(cli({"filter-window", "--in", s(ws.train), "--out", s(out), "--lower", "60", "--upper", "100",
               "--match-lengths", "--seed", "4"})
              .status == 0);
  REQUIRE(cli({"analyze", "--in", s(out), "--out-dir", s(ws.dir / "a")}).status == 0);
  CHECK(read_json(ws.dir / "a/profile.json")["overlap_pct"] == 100.0);
  const Run bad = cli({"filter-window", "--in", s(ws.train), "--out", s(out), "--lower", "100", "--upper", "60"});
  CHECK(bad.status == 1);
  CHECK(nlohmann::json::parse(bad.err)["error"]["kind"] == "filter");
}

TEST_CASE("errors") {
  Workspace ws;
  const Run missing = cli({"analyze", "--in", s(ws.dir / "nope.jsonl")});
  CHECK(missing.status == 1);
  const auto err = nlohmann::json::parse(missing.err);
  CHECK(err["error"]["kind"] == "io");
  CHECK(err["error"]["message"].get<std::string>().find("nope.jsonl") != std::string::npos);

  CHECK(cli({"analyze", "--in", s(ws.train), "--bogus"}).status == 2);
  CHECK(cli({"analyze"}).status == 2);
  CHECK(cli({}).status == 2);
  CHECK(cli({"frobnicate"}).status == 2);
  CHECK(cli({"--help"}).status == 0);
  CHECK(cli({"--version"}).out.find(kToolVersion) != std::string::npos);
  CHECK(cli({"train-baseline", "--in", s(ws.train), "--model", s(ws.dir / "m.json"), "--features", "tfidf"})
            .status == 1);
}

TEST_CASE("config file values yield to command-line flags") {
  Workspace ws;
  const auto cfg = ws.dir / "inject.conf";
  write_file_atomic(cfg, "# injection\ntarget-overlap = 25\npolicy = balanced  # trims both classes\n");
  const auto out = ws.dir / "o.jsonl";
  REQUIRE(cli({"inject", "--config", s(cfg), "--in", s(ws.train), "--out", s(out)}).status == 0);
  CHECK(std::abs(read_json(s(out) + ".spec.json")["achieved_overlap"].get<double>() - 25.0) <= 1.0);
  CHECK(read_json(s(out) + ".meta.json")["config"]["policy"] == "balanced");

  REQUIRE(cli({"inject", "--config", s(cfg), "--in", s(ws.train), "--out", s(out), "--target-overlap", "60"})
              .status == 0);
  CHECK(std::abs(read_json(s(out) + ".spec.json")["achieved_overlap"].get<double>() - 60.0) <= 1.0);

  write_file_atomic(cfg, "colour = blue\n");
  const Run bad = cli({"inject", "--config", s(cfg), "--in", s(ws.train), "--out", s(out)});
  CHECK(bad.status == 2);
  CHECK(nlohmann::json::parse(bad.err)["error"]["kind"] == "config");
}
