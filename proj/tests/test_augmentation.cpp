#include <doctest.h>

#include <atomic>
#include <map>
#include <thread>

#include <httplib.h>

#include "lenbias/augmentation.hpp"
#include "lenbias/error.hpp"
#include "lenbias/injection.hpp"
#include "lenbias/synthetic.hpp"
#include "support.hpp"

using namespace lenbias;
using lenbias::testing::make_doc;

namespace {

Document text_doc(const std::string& id, Label label, const std::string& text) {
  Document d;
  d.id = id;
  d.label = label;
  d.text = text;
  d.token_count = count_tokens(text);
  return d;
}

// Drops the last text of every batch.
class ShortBackend : public FillBackend {
 public:
  std::vector<std::string> fill_batch(const std::vector<std::string>& texts, const std::string&) override {
    return {texts.begin(), texts.end() - 1};
  }
  std::string model_id() const override { return "short"; }
};

// Returns texts untouched, masks and all.
class EchoBackend : public FillBackend {
 public:
  std::vector<std::string> fill_batch(const std::vector<std::string>& texts, const std::string&) override {
    return texts;
  }
  std::string model_id() const override { return "echo"; }
};

class MockService {
 public:
  explicit MockService(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/fill", handler);
    server_.Post("/api/fill", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void fill_with_x(const httplib::Request& req, httplib::Response& res) {
  const auto body = nlohmann::json::parse(req.body);
  const std::string mask = body["mask_token"];
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : body["texts"]) {
    std::string s = t;
    for (auto pos = s.find(mask); pos != std::string::npos; pos = s.find(mask)) s.replace(pos, mask.size(), "x");
    out.push_back(s);
  }
  res.set_content(nlohmann::json{{"texts", out}, {"model_id", "mock-mlm"}}.dump(), "application/json");
}

}  // namespace

TEST_CASE("config validation") {
  AugmentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.q = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = AugmentConfig{};
  cfg.fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = AugmentConfig{};
  cfg.mask_token = "a b";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.mask_token = "";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("mask insertion at a gap") {
  CHECK(insert_masks("great product", {1}, "<mask>") == "great <mask> product");
  CHECK(insert_masks("great product", {0}, "<mask>") == "<mask> great product");
  CHECK(insert_masks("great product", {2}, "<mask>") == "great product <mask>");
  CHECK(insert_masks("a  b", {0, 2, 1}, "M") == "M a  M b M");
  CHECK_THROWS_AS(insert_masks("a b", {1, 1}, "M"), ConfigError);
  CHECK_THROWS_AS(insert_masks("a b", {3}, "M"), ConfigError);
}

TEST_CASE("pair merging") {
  CHECK(merge_pairs("a b c d", {1}, "<mask>") == "a <mask> d");
  CHECK(merge_pairs("a b c d", {0, 2}, "<mask>") == "<mask> <mask>");
  CHECK_THROWS_AS(merge_pairs("a b c d", {0, 1}, "M"), ConfigError);
  CHECK_THROWS_AS(merge_pairs("a b c d", {3}, "M"), ConfigError);
}

TEST_CASE("extension draws reach every gap") {
  const Document d = text_doc("g", 1, "great product");
  AugmentConfig cfg;
  cfg.q = 0.4;
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto plan = plan_extension(d, cfg, seed);
    REQUIRE(plan);
    CHECK(count_tokens(plan->masked_text) == 2 + plan->k);
    CHECK(plan->expected_length_delta == std::int64_t(plan->k));
    if (plan->k == 0) CHECK(plan->masked_text == d.text);
    if (plan->k == 1) seen.insert(plan->masked_text);
  }
  CHECK(seen == std::set<std::string>{"<mask> great product", "great <mask> product", "great product <mask>"});
}

TEST_CASE("extension keeps the original tokens in order") {
  const Document d = text_doc("o", 1, "one two three four five six seven");
  AugmentConfig cfg;
  cfg.q = 0.5;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto plan = plan_extension(d, cfg, seed);
    std::string kept;
    const auto spans = token_spans(plan->masked_text);
    for (const auto& [b, e] : spans) {
      const std::string tok = plan->masked_text.substr(b, e - b);
      if (tok != cfg.mask_token) kept += (kept.empty() ? "" : " ") + tok;
    }
    CHECK(kept == d.text);
  }
}

TEST_CASE("binomial mask count mean") {
  const Document d = make_doc("m", 1, 100);
  AugmentConfig cfg;
  double total = 0.0;
  for (std::uint64_t i = 0; i < 10000; ++i) total += double(plan_extension(d, cfg, document_seed(i, "m"))->k);
  const double mean = total / 10000.0;
  CHECK(mean >= 14.25);
  CHECK(mean <= 15.75);
}

TEST_CASE("reduction length is m - r") {
  AugmentConfig cfg;
  cfg.q = 0.3;
  for (std::size_t m = 2; m < 40; ++m) {
    const Document d = make_doc("r", 0, m);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto plan = plan_reduction(d, cfg, seed);
      REQUIRE(plan);
      CHECK(plan->k <= m / 2);
      CHECK(count_tokens(plan->masked_text) == m - plan->k);
      CHECK(plan->expected_length_delta == -std::int64_t(plan->k));
    }
  }
  CHECK_FALSE(plan_reduction(make_doc("one", 0, 1), cfg, 1));
  CHECK_FALSE(plan_extension(text_doc("e", 1, "  "), cfg, 1));
}

TEST_CASE("single-pair reductions are spread over all pairs") {
  const Document d = text_doc("p", 0, "a b c d");
  AugmentConfig cfg;
  cfg.q = 0.2;
  std::map<std::string, int> counts;
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    const auto plan = plan_reduction(d, cfg, seed);
    if (plan->k == 1) ++counts[plan->masked_text];
    if (plan->k == 2) CHECK(plan->masked_text == "<mask> <mask>");
  }
  REQUIRE(counts.size() == 3);
  CHECK(counts.contains("a <mask> d"));
  int lo = 1 << 30, hi = 0;
  for (const auto& [text, n] : counts) lo = std::min(lo, n), hi = std::max(hi, n);
  CHECK(double(hi - lo) / double(hi) < 0.2);
}

TEST_CASE("dummy fill") {
  DummyFillBackend dummy;
  MaskedDocument plan{"g", 1, MaskOperation::extend, "great <mask> product", 1, 0, 1, 2};
  MaskedDocument none{"z", 1, MaskOperation::extend, "keep  this\ttext", 0, 0, 0, 3};
  const auto docs = fill({plan, none}, dummy, "<mask>", TokenizerMode::whitespace);
  CHECK(docs[0].text == "great the product");
  CHECK(docs[0].id == "g::ext");
  CHECK(docs[0].token_count == 3);
  CHECK(docs[0].extra["augmented_from"] == "g");
  CHECK(docs[1].text == "keep  this\ttext");
  CHECK(dummy.model_id() == "dummy:the");
  CHECK_THROWS_AS(DummyFillBackend("two words"), ConfigError);
}

TEST_CASE("external counts shift by the planned delta") {
  DummyFillBackend dummy;
  MaskedDocument plan{"g", 0, MaskOperation::reduce, "<mask> c", 1, 0, -1, 9};
  const auto docs = fill({plan}, dummy, "<mask>", TokenizerMode::external_counts);
  CHECK(docs[0].token_count == 8);
  CHECK(docs[0].id == "g::red");
}

TEST_CASE("misbehaving backends raise fill errors") {
  MaskedDocument a{"a", 1, MaskOperation::extend, "x <mask>", 1, 0, 1, 1};
  MaskedDocument b{"b", 1, MaskOperation::extend, "<mask> y", 1, 0, 1, 1};
  ShortBackend short_backend;
  CHECK_THROWS_AS(fill({a, b}, short_backend, "<mask>", TokenizerMode::whitespace), FillError);
  EchoBackend echo;
  try {
    fill({a}, echo, "<mask>", TokenizerMode::whitespace);
    FAIL("expected a fill error");
  } catch (const FillError& e) {
    CHECK(std::string(e.what()).find("'a'") != std::string::npos);
  }
}

TEST_CASE("augmenting a disjoint corpus creates overlap") {
  SyntheticConfig cfg;
  cfg.n_docs = 2000;
  const Corpus c = generate_synthetic(cfg);
  const LengthProfile p = compute_profile(c);
  const InjectionSpec spec = thresholds_for_overlap(c, p, 0.0);
  auto [zero, s] = alter_training_set(c, p, spec.lower, spec.upper);
  const LengthProfile pz = compute_profile(zero);
  REQUIRE(pz.overlap_pct == 0.0);
  DummyFillBackend dummy;
  AugmentConfig acfg;
  const AugmentResult r = augment_corpus(zero, pz, acfg, dummy);
  CHECK(r.report.overlap_before == 0.0);
  CHECK(r.report.overlap_after > 0.0);
  CHECK(r.corpus.size() <= 2 * zero.size());
  CHECK(r.report.extended == zero.count(pz.short_label));
  CHECK(r.report.backend == "dummy:the");
  CHECK(compute_profile(r.corpus).overlap_pct == r.report.overlap_after);

  acfg.replace = true;
  acfg.fraction = 0.5;
  const AugmentResult half = augment_corpus(zero, pz, acfg, dummy);
  CHECK(half.corpus.size() == zero.size());
  CHECK(half.plans.size() == std::size_t(std::llround(zero.count(pz.short_label) * 0.5) +
                                         std::llround(zero.count(pz.long_label) * 0.5)));
}

TEST_CASE("augmentation does not depend on document order") {
  SyntheticConfig cfg;
  cfg.n_docs = 200;
  const Corpus c = generate_synthetic(cfg);
  std::vector<Document> reversed(c.documents().rbegin(), c.documents().rend());
  const Corpus r(std::move(reversed), c.tokenizer_mode());
  DummyFillBackend dummy;
  AugmentConfig acfg;
  acfg.fraction = 0.5;
  auto texts = [&](const Corpus& corpus) {
    std::map<std::string, std::string> out;
    const AugmentResult result = augment_corpus(corpus, compute_profile(corpus), acfg, dummy);
    for (const auto& d : result.corpus.documents()) out[d.id] = d.text;
    return out;
  };
  CHECK(texts(c) == texts(r));
}

TEST_CASE("http backend round-trip") {
  MockService service(fill_with_x);
  for (const std::string& url : {service.url(), service.url() + "/api/"}) {
    HttpFillBackend http(url, {2, 3, 5});
    MaskedDocument a{"a", 1, MaskOperation::extend, "p <mask> q", 1, 0, 1, 2};
    MaskedDocument b{"b", 1, MaskOperation::extend, "<mask> r", 1, 0, 1, 1};
    MaskedDocument c{"c", 0, MaskOperation::reduce, "s <mask>", 1, 0, -1, 3};
    const auto docs = fill({a, b, c}, http, "<mask>", TokenizerMode::whitespace);
    CHECK(docs[0].text == "p x q");
    CHECK(docs[1].text == "x r");
    CHECK(docs[2].text == "s x");
    CHECK(http.model_id() == "mock-mlm");
  }
}

TEST_CASE("http backend retries server errors") {
  std::atomic<int> calls{0};
  MockService service([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
    res.set_content("loading", "text/plain");
  });
  HttpFillBackend http(service.url(), {32, 3, 5});
  try {
    http.fill_batch({"a <mask>"}, "<mask>");
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("after 3 attempt(s)") != std::string::npos);
  }
  CHECK(calls == 3);
}

TEST_CASE("http backend recovers after a transient failure") {
  std::atomic<int> calls{0};
  MockService service([&](const httplib::Request& req, httplib::Response& res) {
    if (calls++ == 0) {
      res.status = 500;
      return;
    }
    fill_with_x(req, res);
  });
  HttpFillBackend http(service.url(), {32, 3, 5});
  CHECK(http.fill_batch({"a <mask>"}, "<mask>") == std::vector<std::string>{"a x"});
}

TEST_CASE("http backend does not retry client errors") {
  std::atomic<int> calls{0};
  MockService service([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 413;
  });
  HttpFillBackend http(service.url(), {32, 3, 5});
  CHECK_THROWS_AS(http.fill_batch({"a <mask>"}, "<mask>"), FillError);
  CHECK(calls == 1);
}

TEST_CASE("unreachable service") {
  HttpFillBackend http("http://127.0.0.1:1", {32, 2, 1});
  try {
    http.fill_batch({"a <mask>"}, "<mask>");
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("after 2 attempt(s)") != std::string::npos);
    CHECK(e.kind() == "transport");
  }
  CHECK_THROWS_AS(HttpFillBackend("localhost:8000"), ConfigError);
}
