#include "lenbias/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "lenbias/error.hpp"
#include "lenbias/io.hpp"

namespace lenbias {

namespace {

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x0009: case 0x000A: case 0x000B: case 0x000C: case 0x000D:
    case 0x0020: case 0x0085: case 0x00A0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Decodes one code point starting at `pos`; returns its byte width. Malformed
// sequences decode as U+FFFD of width 1.
std::size_t decode_utf8(std::string_view s, std::size_t pos, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  std::size_t width;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    cp = b0 & 0x1F;
    width = 2;
  } else if ((b0 & 0xF0) == 0xE0) {
    cp = b0 & 0x0F;
    width = 3;
  } else if ((b0 & 0xF8) == 0xF0) {
    cp = b0 & 0x07;
    width = 4;
  } else {
    cp = 0xFFFD;
    return 1;
  }
  if (pos + width > s.size()) {
    cp = 0xFFFD;
    return 1;
  }
  for (std::size_t i = 1; i < width; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      cp = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return width;
}

const std::set<std::string> kKnownFields = {"id", "label", "text", "token_count"};

}  // namespace

std::string to_string(TokenizerMode mode) {
  return mode == TokenizerMode::whitespace ? "whitespace" : "external-counts";
}

TokenizerMode parse_tokenizer_mode(std::string_view text) {
  if (text == "whitespace") return TokenizerMode::whitespace;
  if (text == "external-counts" || text == "external") return TokenizerMode::external_counts;
  throw ConfigError("unknown tokenizer mode '" + std::string(text) +
                    "' (expected whitespace or external-counts)");
}

std::vector<std::pair<std::size_t, std::size_t>> token_spans(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  bool in_token = false;
  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp;
    const std::size_t width = decode_utf8(text, pos, cp);
    if (is_unicode_space(cp)) {
      if (in_token) spans.emplace_back(start, pos);
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      start = pos;
    }
    pos += width;
  }
  if (in_token) spans.emplace_back(start, text.size());
  return spans;
}

Length count_tokens(std::string_view text) {
  Length count = 0;
  bool in_token = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp;
    pos += decode_utf8(text, pos, cp);
    const bool space = is_unicode_space(cp);
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

Corpus::Corpus(std::vector<Document> documents, TokenizerMode mode, std::string provenance)
    : documents_(std::move(documents)), mode_(mode), provenance_(std::move(provenance)) {
  std::unordered_set<std::string_view> seen;
  std::set<Label> labels;
  for (const auto& doc : documents_) {
    if (!seen.insert(doc.id).second) throw UniquenessError("duplicate document id '" + doc.id + "'");
    labels.insert(doc.label);
  }
  if (labels.size() > 2) {
    throw ArityError("corpus has " + std::to_string(labels.size()) +
                     " distinct labels; exactly two classes are supported");
  }
  labels_.assign(labels.begin(), labels.end());
}

std::array<Label, 2> Corpus::require_two_classes() const {
  if (labels_.size() != 2) {
    throw ArityError("expected a two-class corpus, found " + std::to_string(labels_.size()) +
                     " label(s)");
  }
  return {labels_[0], labels_[1]};
}

std::size_t Corpus::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      documents_.begin(), documents_.end(), [label](const Document& d) { return d.label == label; }));
}

const Document* Corpus::find(std::string_view id) const {
  for (const auto& doc : documents_)
    if (doc.id == id) return &doc;
  return nullptr;
}

Corpus Corpus::filtered(const std::function<bool(const Document&)>& keep,
                        std::string provenance) const {
  std::vector<Document> kept;
  for (const auto& doc : documents_)
    if (keep(doc)) kept.push_back(doc);
  return Corpus(std::move(kept), mode_, std::move(provenance));
}

Corpus parse_corpus(std::string_view jsonl, TokenizerMode mode, std::string provenance) {
  std::vector<Document> docs;
  std::unordered_set<std::string> ids;
  std::set<Label> labels;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t eol = jsonl.find('\n', pos);
    if (eol == std::string_view::npos) eol = jsonl.size();
    std::string_view line = jsonl.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::ordered_json record;
    try {
      record = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line_no, "record is not a JSON object");

    Document doc;
    auto id = record.find("id");
    if (id == record.end() || !id->is_string()) throw ParseError(line_no, "missing string field 'id'");
    doc.id = id->get<std::string>();
    auto label = record.find("label");
    if (label == record.end() || !label->is_number_integer())
      throw ParseError(line_no, "missing integer field 'label'");
    doc.label = label->get<Label>();
    auto text = record.find("text");
    if (text == record.end() || !text->is_string())
      throw ParseError(line_no, "missing string field 'text'");
    doc.text = text->get<std::string>();

    auto count = record.find("token_count");
    if (mode == TokenizerMode::external_counts) {
      if (count == record.end() || !count->is_number_integer() || count->get<std::int64_t>() < 0)
        throw ParseError(line_no, "external-counts mode needs a non-negative integer 'token_count'");
      doc.token_count = count->get<Length>();
      if (doc.token_count == 0 && count_tokens(doc.text) != 0)
        throw ParseError(line_no, "token_count 0 given for non-empty text");
    } else {
      doc.token_count = count_tokens(doc.text);
    }

    for (auto it = record.begin(); it != record.end(); ++it)
      if (!kKnownFields.contains(it.key())) doc.extra[it.key()] = it.value();

    if (!ids.insert(doc.id).second)
      throw UniquenessError("line " + std::to_string(line_no) + ": duplicate document id '" + doc.id + "'");
    labels.insert(doc.label);
    if (labels.size() > 2)
      throw ArityError("line " + std::to_string(line_no) + ": third distinct label " +
                       std::to_string(doc.label) + "; exactly two classes are supported");
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs), mode, std::move(provenance));
}

Corpus load_corpus(const std::filesystem::path& path, TokenizerMode mode) {
  if (!std::filesystem::exists(path)) throw IoError("input file not found: '" + path.string() + "'");
  return parse_corpus(read_file(path), mode, path.filename().string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.documents()) {
    nlohmann::ordered_json record;
    record["id"] = doc.id;
    record["label"] = doc.label;
    record["text"] = doc.text;
    record["token_count"] = doc.token_count;
    for (auto it = doc.extra.begin(); it != doc.extra.end(); ++it) record[it.key()] = it.value();
    out += record.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_corpus(corpus));
}

}  // namespace lenbias
