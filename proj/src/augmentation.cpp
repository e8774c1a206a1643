#include "lenbias/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <httplib.h>

#include "lenbias/error.hpp"
#include "lenbias/io.hpp"
#include "lenbias/random.hpp"

namespace lenbias {

namespace {

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

std::string replace_all(const std::string& text, const std::string& needle, const std::string& with) {
  std::string out;
  std::size_t pos = 0;
  for (std::size_t hit = text.find(needle); hit != std::string::npos; hit = text.find(needle, pos)) {
    out.append(text, pos, hit - pos);
    out += with;
    pos = hit + needle.size();
  }
  out.append(text, pos, std::string::npos);
  return out;
}

struct Edit {
  std::size_t begin;
  std::size_t end;
  std::string replacement;
};

std::string apply_edits(const std::string& text, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.begin < b.begin; });
  std::string out;
  std::size_t pos = 0;
  for (const auto& e : edits) {
    out.append(text, pos, e.begin - pos);
    out += e.replacement;
    pos = e.end;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("q must lie in (0, 1), got " + format_double(q));
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("fraction must lie in (0, 1], got " + format_double(fraction));
  const auto spans = token_spans(mask_token);
  const bool single_word = spans.size() == 1 && spans[0].first == 0 && spans[0].second == mask_token.size();
  if (!single_word) throw ConfigError("mask token must be a single non-empty word without whitespace");
}

std::string to_string(MaskOperation op) { return op == MaskOperation::extend ? "extend" : "reduce"; }

nlohmann::ordered_json to_json(const MaskedDocument& masked) {
  nlohmann::ordered_json j;
  j["source_id"] = masked.source_id;
  j["label"] = masked.label;
  j["operation"] = to_string(masked.operation);
  j["k"] = masked.k;
  j["seed"] = masked.seed;
  j["expected_length_delta"] = masked.expected_length_delta;
  j["masked_text"] = masked.masked_text;
  return j;
}

std::uint64_t document_seed(std::uint64_t root, const std::string& doc_id) {
  return derive_seed(root, "doc:" + doc_id);
}

std::string insert_masks(const std::string& text, std::vector<std::size_t> gaps, const std::string& mask_token) {
  const auto spans = token_spans(text);
  std::sort(gaps.begin(), gaps.end());
  if (std::adjacent_find(gaps.begin(), gaps.end()) != gaps.end())
    throw ConfigError("insert_masks: gap indices must be distinct");
  std::vector<Edit> edits;
  for (std::size_t g : gaps) {
    if (g > spans.size()) throw ConfigError("insert_masks: gap index out of range");
    if (spans.empty()) {
      edits.push_back({text.size(), text.size(), mask_token});
    } else if (g == spans.size()) {
      edits.push_back({spans.back().second, spans.back().second, " " + mask_token});
    } else {
      edits.push_back({spans[g].first, spans[g].first, mask_token + " "});
    }
  }
  return apply_edits(text, std::move(edits));
}

std::string merge_pairs(const std::string& text, std::vector<std::size_t> pair_starts,
                        const std::string& mask_token) {
  const auto spans = token_spans(text);
  std::sort(pair_starts.begin(), pair_starts.end());
  std::vector<Edit> edits;
  for (std::size_t i = 0; i < pair_starts.size(); ++i) {
    const std::size_t p = pair_starts[i];
    if (p + 1 >= spans.size()) throw ConfigError("merge_pairs: pair start out of range");
    if (i > 0 && pair_starts[i - 1] + 1 >= p) throw ConfigError("merge_pairs: pairs overlap");
    edits.push_back({spans[p].first, spans[p + 1].second, mask_token});
  }
  return apply_edits(text, std::move(edits));
}

std::optional<MaskedDocument> plan_extension(const Document& doc, const AugmentConfig& cfg, std::uint64_t seed) {
  const std::size_t m = count_tokens(doc.text);
  if (m == 0 || doc.text.find(cfg.mask_token) != std::string::npos) return std::nullopt;
  Rng rng(seed);
  const std::size_t k = rng.binomial(m, cfg.q);
  MaskedDocument masked{doc.id, doc.label, MaskOperation::extend, doc.text, k, seed,
                        static_cast<std::int64_t>(k), doc.token_count};
  if (k > 0) masked.masked_text = insert_masks(doc.text, rng.sample_without_replacement(m + 1, k), cfg.mask_token);
  return masked;
}

std::optional<MaskedDocument> plan_reduction(const Document& doc, const AugmentConfig& cfg, std::uint64_t seed) {
  const std::size_t m = count_tokens(doc.text);
  if (m < 2 || doc.text.find(cfg.mask_token) != std::string::npos) return std::nullopt;
  Rng rng(seed);
  const std::size_t r = std::min(rng.binomial(m, cfg.q), m / 2);
  MaskedDocument masked{doc.id, doc.label, MaskOperation::reduce, doc.text, r, seed,
                        -static_cast<std::int64_t>(r), doc.token_count};
  if (r > 0) {
    // Choosing r disjoint adjacent pairs among m tokens is choosing r of
    // m - r slots (each pair collapses to one slot): the i-th smallest slot
    // p_i becomes the pair starting at token p_i + i.
    auto slots = rng.sample_without_replacement(m - r, r);
    std::sort(slots.begin(), slots.end());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] += i;
    masked.masked_text = merge_pairs(doc.text, std::move(slots), cfg.mask_token);
  }
  return masked;
}

DummyFillBackend::DummyFillBackend(std::string word) : word_(std::move(word)) {
  if (count_tokens(word_) != 1) throw ConfigError("dummy fill word must be exactly one word");
}

std::vector<std::string> DummyFillBackend::fill_batch(const std::vector<std::string>& texts,
                                                      const std::string& mask_token) {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(replace_all(t, mask_token, word_));
  return out;
}

HttpFillBackend::HttpFillBackend(std::string endpoint) : HttpFillBackend(std::move(endpoint), Options{}) {}

HttpFillBackend::HttpFillBackend(std::string endpoint, Options options)
    : endpoint_(std::move(endpoint)), options_(options) {
  if (endpoint_.rfind("http://", 0) != 0)
    throw ConfigError("fill endpoint must be an http:// URL, got '" + endpoint_ + "'");
  if (options_.batch_size == 0 || options_.attempts == 0)
    throw ConfigError("fill batch size and attempts must be positive");
}

std::vector<std::string> HttpFillBackend::fill_batch(const std::vector<std::string>& texts,
                                                     const std::string& mask_token) {
  const std::size_t host_start = std::string("http://").size();
  const std::size_t path_start = endpoint_.find('/', host_start);
  const std::string base = endpoint_.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : endpoint_.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(base);
  client.set_connection_timeout(options_.timeout_seconds, 0);
  client.set_read_timeout(options_.timeout_seconds, 0);
  client.set_write_timeout(options_.timeout_seconds, 0);

  const nlohmann::json request = {{"texts", texts}, {"mask_token", mask_token}};
  const std::string body = request.dump();
  std::string last_error;
  for (std::size_t attempt = 1; attempt <= options_.attempts; ++attempt) {
    auto res = client.Post(prefix + "/fill", body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status != 200) {
      throw FillError("fill service rejected the batch with HTTP " + std::to_string(res->status) + ": " +
                      res->body);
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw FillError(std::string("fill service returned malformed JSON: ") + e.what());
    }
    if (!reply.contains("texts") || !reply["texts"].is_array())
      throw FillError("fill service response lacks a 'texts' array");
    if (reply.contains("model_id") && reply["model_id"].is_string()) model_id_ = reply["model_id"];
    std::vector<std::string> out;
    for (const auto& t : reply["texts"]) {
      if (!t.is_string()) throw FillError("fill service returned a non-string text");
      out.push_back(t.get<std::string>());
    }
    return out;
  }
  throw TransportError("fill service at " + endpoint_ + " unreachable after " +
                       std::to_string(options_.attempts) + " attempt(s): " + last_error);
}

std::vector<Document> fill(const std::vector<MaskedDocument>& masked, FillBackend& backend,
                           const std::string& mask_token, TokenizerMode mode) {
  std::vector<std::string> filled(masked.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    if (count_occurrences(masked[i].masked_text, mask_token) == 0) filled[i] = masked[i].masked_text;
    else pending.push_back(i);
  }

  const std::size_t batch = std::max<std::size_t>(1, backend.max_batch());
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const std::size_t stop = std::min(pending.size(), start + batch);
    std::vector<std::string> texts;
    for (std::size_t j = start; j < stop; ++j) texts.push_back(masked[pending[j]].masked_text);
    const auto out = backend.fill_batch(texts, mask_token);
    if (out.size() != texts.size()) {
      throw FillError("fill backend returned " + std::to_string(out.size()) + " texts for a batch of " +
                      std::to_string(texts.size()) + " starting at '" + masked[pending[start]].source_id + "'");
    }
    // Results are matched to plans by position within the batch.
    for (std::size_t j = start; j < stop; ++j) filled[pending[j]] = out[j - start];
  }

  std::vector<Document> docs;
  docs.reserve(masked.size());
  for (std::size_t i = 0; i < masked.size(); ++i) {
    const auto& plan = masked[i];
    if (filled[i].find(mask_token) != std::string::npos)
      throw FillError("filled text for '" + plan.source_id + "' still contains " + mask_token);
    const Length words = count_tokens(filled[i]);
    if (words != count_tokens(plan.masked_text)) {
      throw FillError("filled text for '" + plan.source_id + "' has " + std::to_string(words) +
                      " words; expected one word per mask");
    }
    Document doc;
    doc.id = plan.source_id + (plan.operation == MaskOperation::extend ? "::ext" : "::red");
    doc.label = plan.label;
    doc.text = filled[i];
    if (mode == TokenizerMode::whitespace) {
      doc.token_count = words;
    } else {
      const auto shifted = static_cast<std::int64_t>(plan.source_token_count) + plan.expected_length_delta;
      doc.token_count = static_cast<Length>(std::max<std::int64_t>(shifted, words > 0 ? 1 : 0));
    }
    doc.extra["augmented_from"] = plan.source_id;
    doc.extra["augmentation"] = to_string(plan.operation);
    docs.push_back(std::move(doc));
  }
  return docs;
}

nlohmann::ordered_json to_json(const AugmentReport& report) {
  nlohmann::ordered_json j;
  j["overlap_before"] = report.overlap_before;
  j["overlap_after"] = report.overlap_after;
  j["extended"] = report.extended;
  j["reduced"] = report.reduced;
  j["backend"] = report.backend;
  j["fill_passes"] = report.fill_passes;
  j["warnings"] = report.warnings;
  return j;
}

AugmentResult augment_corpus(const Corpus& train, const LengthProfile& profile, const AugmentConfig& cfg,
                             FillBackend& backend) {
  cfg.validate();
  train.require_two_classes();

  // Per-class sample: rank by a per-document hash and keep the top share.
  std::map<std::string, bool> selected;
  for (Label label : {profile.short_label, profile.long_label}) {
    std::vector<std::pair<std::uint64_t, std::string>> ranked;
    for (const auto& doc : train.documents())
      if (doc.label == label) ranked.emplace_back(derive_seed(cfg.seed, "select:" + doc.id), doc.id);
    std::sort(ranked.begin(), ranked.end());
    const auto take = static_cast<std::size_t>(std::llround(cfg.fraction * static_cast<double>(ranked.size())));
    for (std::size_t i = 0; i < take && i < ranked.size(); ++i) selected[ranked[i].second] = true;
  }

  AugmentResult result;
  for (const auto& doc : train.documents()) {
    if (!selected.contains(doc.id)) continue;
    const auto seed = document_seed(cfg.seed, doc.id);
    std::optional<MaskedDocument> plan;
    if (doc.label == profile.short_label) {
      plan = plan_extension(doc, cfg, seed);
      if (!plan) result.report.warnings.push_back("skipped extension of '" + doc.id + "': no usable tokens");
    } else {
      plan = plan_reduction(doc, cfg, seed);
      if (!plan) result.report.warnings.push_back("skipped reduction of '" + doc.id + "': fewer than 2 usable tokens");
    }
    if (!plan) continue;
    (plan->operation == MaskOperation::extend ? result.report.extended : result.report.reduced)++;
    result.plans.push_back(std::move(*plan));
  }

  auto synthetic = fill(result.plans, backend, cfg.mask_token, train.tokenizer_mode());
  result.report.backend = backend.model_id();

  std::vector<Document> docs;
  if (cfg.replace) {
    std::map<std::string, std::size_t> by_source;
    for (std::size_t i = 0; i < result.plans.size(); ++i) by_source[result.plans[i].source_id] = i;
    for (const auto& doc : train.documents()) {
      const auto it = by_source.find(doc.id);
      docs.push_back(it == by_source.end() ? doc : synthetic[it->second]);
    }
  } else {
    docs = train.documents();
    docs.insert(docs.end(), std::make_move_iterator(synthetic.begin()), std::make_move_iterator(synthetic.end()));
  }
  std::string provenance = train.provenance();
  if (!provenance.empty()) provenance += " | ";
  provenance += "augmented: q=" + format_double(cfg.q) + ",fraction=" + format_double(cfg.fraction) +
                (cfg.replace ? ",replace" : ",add");
  result.corpus = Corpus(std::move(docs), train.tokenizer_mode(), std::move(provenance));

  result.report.overlap_before = profile.overlap_pct;
  result.report.overlap_after = compute_overlap(histogram_of(result.corpus, profile.short_label),
                                                histogram_of(result.corpus, profile.long_label));
  return result;
}

}  // namespace lenbias
