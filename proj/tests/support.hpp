#pragma once

// Small builders shared by the unit tests.

#include <atomic>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "lenbias/corpus.hpp"

namespace lenbias::testing {

inline std::string words(std::size_t n, const std::string& word = "w") {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) text += ' ';
    text += word;
  }
  return text;
}

inline Document make_doc(std::string id, Label label, std::size_t len, const std::string& word = "w") {
  Document d;
  d.id = std::move(id);
  d.label = label;
  d.text = words(len, word);
  d.token_count = len;
  return d;
}

/// Corpus with one document per (label, length) entry.
inline Corpus corpus_of(const std::vector<std::pair<Label, std::size_t>>& entries) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < entries.size(); ++i)
    docs.push_back(make_doc("d" + std::to_string(i), entries[i].first, entries[i].second));
  return Corpus(std::move(docs), TokenizerMode::whitespace, "test");
}

inline Corpus corpus_of_lengths(const std::vector<std::size_t>& short_lens, const std::vector<std::size_t>& long_lens,
                                Label short_label = 1, Label long_label = 0) {
  std::vector<std::pair<Label, std::size_t>> entries;
  for (auto len : short_lens) entries.emplace_back(short_label, len);
  for (auto len : long_lens) entries.emplace_back(long_label, len);
  return corpus_of(entries);
}

/// Fresh scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lenbias-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace lenbias::testing
