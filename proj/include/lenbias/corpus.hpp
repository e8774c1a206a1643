#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace lenbias {

using Label = std::int64_t;
using Length = std::size_t;

enum class TokenizerMode { whitespace, external_counts };

std::string to_string(TokenizerMode mode);
TokenizerMode parse_tokenizer_mode(std::string_view text);

/// One labeled observation. `extra` keeps unknown JSONL fields so they
/// survive a load/save cycle.
struct Document {
  std::string id;
  Label label = 0;
  std::string text;
  Length token_count = 0;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  friend bool operator==(const Document&, const Document&) = default;
};

/// An ordered, id-unique collection of documents over at most two labels.
///
/// Subsets produced by the pipeline (a Gap-test file, a filtered window) can
/// legitimately hold a single class, so the container admits one or two
/// labels; operations that need both classes check for them explicitly with
/// `require_two_classes`.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> documents, TokenizerMode mode, std::string provenance = {});

  const std::vector<Document>& documents() const noexcept { return documents_; }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }

  /// Distinct labels, ascending.
  const std::vector<Label>& labels() const noexcept { return labels_; }
  TokenizerMode tokenizer_mode() const noexcept { return mode_; }
  const std::string& provenance() const noexcept { return provenance_; }

  /// Throws ArityError unless exactly two labels are present.
  std::array<Label, 2> require_two_classes() const;

  std::size_t count(Label label) const;
  const Document* find(std::string_view id) const;

  /// Documents passing `keep`, order preserved, under a new provenance.
  Corpus filtered(const std::function<bool(const Document&)>& keep,
                  std::string provenance) const;

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::vector<Document> documents_;
  std::vector<Label> labels_;
  TokenizerMode mode_ = TokenizerMode::whitespace;
  std::string provenance_;
};

/// Number of maximal runs of non-whitespace code points. Whitespace is the
/// Unicode White_Space set; malformed UTF-8 bytes count as non-whitespace.
Length count_tokens(std::string_view text);

/// Byte ranges [begin, end) of each whitespace-delimited token.
std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text);

Corpus parse_corpus(std::string_view jsonl, TokenizerMode mode, std::string provenance = {});
Corpus load_corpus(const std::filesystem::path& path, TokenizerMode mode);

std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace lenbias
