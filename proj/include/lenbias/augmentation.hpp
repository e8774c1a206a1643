#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lenbias/analysis.hpp"
#include "lenbias/corpus.hpp"

namespace lenbias {

struct AugmentConfig {
  /// Per-token success probability of the Binomial(m, q) mask count.
  double q = 0.15;
  std::string mask_token = "<mask>";
  /// Share of each class that gets a synthetic copy.
  double fraction = 1.0;
  std::uint64_t seed = 0;
  /// Substitute synthetics for their sources instead of adding them.
  bool replace = false;

  /// Throws ConfigError on q outside (0,1), fraction outside (0,1], or a
  /// mask token that is empty or contains whitespace.
  void validate() const;
};

enum class MaskOperation { extend, reduce };
std::string to_string(MaskOperation op);

struct MaskedDocument {
  std::string source_id;
  Label label = 0;
  MaskOperation operation = MaskOperation::extend;
  std::string masked_text;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::int64_t expected_length_delta = 0;
  Length source_token_count = 0;
};

nlohmann::ordered_json to_json(const MaskedDocument& masked);

/// Per-document seed: a function of the root seed and the document id only,
/// so plans do not depend on iteration order.
std::uint64_t document_seed(std::uint64_t root, const std::string& doc_id);

/// Inserts one mask before token `g` for each gap index g in `gaps`
/// (g == m appends after the last token). Gaps must be distinct. Original
/// bytes, including whitespace, are kept.
std::string insert_masks(const std::string& text, std::vector<std::size_t> gaps, const std::string& mask_token);

/// Replaces each token pair (p, p + 1), p in `pair_starts`, with one mask.
/// Pairs must be disjoint.
std::string merge_pairs(const std::string& text, std::vector<std::size_t> pair_starts,
                        const std::string& mask_token);

/// k ~ Binomial(m, q) masks at distinct inter-token gaps chosen uniformly.
/// Returns nullopt (skip) for a document without tokens.
std::optional<MaskedDocument> plan_extension(const Document& doc, const AugmentConfig& cfg, std::uint64_t seed);

/// r = min(Binomial(m, q), floor(m / 2)) disjoint adjacent pairs, chosen
/// uniformly among all C(m - r, r) such sets, each merged into one mask.
/// Returns nullopt (skip) when m < 2.
std::optional<MaskedDocument> plan_reduction(const Document& doc, const AugmentConfig& cfg, std::uint64_t seed);

/// Something that replaces every mask in a text with exactly one word.
class FillBackend {
 public:
  virtual ~FillBackend() = default;
  /// Same length and order as `texts`.
  virtual std::vector<std::string> fill_batch(const std::vector<std::string>& texts,
                                              const std::string& mask_token) = 0;
  virtual std::string model_id() const = 0;
  virtual std::size_t max_batch() const { return 32; }
};

/// Substitutes a fixed word for every mask.
class DummyFillBackend final : public FillBackend {
 public:
  explicit DummyFillBackend(std::string word = "the");
  std::vector<std::string> fill_batch(const std::vector<std::string>& texts,
                                      const std::string& mask_token) override;
  std::string model_id() const override { return "dummy:" + word_; }

 private:
  std::string word_;
};

/// Client for the fill service: POST {endpoint}/fill with
/// {"texts": [...], "mask_token": "..."}, expecting {"texts": [...],
/// "model_id": "..."}. Connection failures and 5xx responses are retried.
class HttpFillBackend final : public FillBackend {
 public:
  struct Options {
    std::size_t batch_size = 32;
    std::size_t attempts = 3;
    int timeout_seconds = 60;
  };

  explicit HttpFillBackend(std::string endpoint);
  HttpFillBackend(std::string endpoint, Options options);
  std::vector<std::string> fill_batch(const std::vector<std::string>& texts,
                                      const std::string& mask_token) override;
  std::string model_id() const override { return model_id_.empty() ? "http:" + endpoint_ : model_id_; }
  std::size_t max_batch() const override { return options_.batch_size; }

 private:
  std::string endpoint_;
  Options options_;
  std::string model_id_;
};

/// Fills every plan and builds the synthetic documents (id = source id +
/// "::ext" or "::red", label inherited). Plans without masks skip the
/// backend and keep their text byte for byte. Throws FillError naming the
/// offending source id when a filled text still holds a mask or its word
/// count is not what one-word-per-mask implies.
std::vector<Document> fill(const std::vector<MaskedDocument>& masked, FillBackend& backend,
                           const std::string& mask_token, TokenizerMode mode);

struct AugmentReport {
  double overlap_before = 0.0;
  double overlap_after = 0.0;
  std::size_t extended = 0;
  std::size_t reduced = 0;
  std::vector<std::string> warnings;
  std::string backend;
  std::string fill_passes = "single";
};

nlohmann::ordered_json to_json(const AugmentReport& report);

struct AugmentResult {
  Corpus corpus;
  std::vector<MaskedDocument> plans;
  AugmentReport report;
};

/// Extends a `fraction` sample of the short class, reduces a `fraction`
/// sample of the long class, fills both, and returns the original documents
/// plus the synthetics (or the synthetics in their sources' place when
/// cfg.replace is set).
AugmentResult augment_corpus(const Corpus& train, const LengthProfile& profile, const AugmentConfig& cfg,
                             FillBackend& backend);

}  // namespace lenbias
