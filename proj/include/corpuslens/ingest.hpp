/*
 * Copyright 2026 The corpuslens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Corpus loading, sentence segmentation and sentence-level statistics.

#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "corpuslens/detail/csv.hpp"
#include "corpuslens/detail/text.hpp"
#include "corpuslens/error.hpp"

namespace corpuslens {

enum class CorpusFormat { plain_dir, jsonl };

struct Document {
  std::string doc_id;
  std::string corpus_label;
  std::string text;
  std::string source_path;
  std::optional<std::string> date;
};

struct Sentence {
  std::string sentence_id;
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;
  std::size_t token_count = 0;

  bool operator==(const Sentence&) const = default;
};

// Documents are sorted by doc_id; sentences follow document order.
struct Corpus {
  std::string label;
  std::vector<Document> documents;
  std::vector<Sentence> sentences;
};

struct SegmentationConfig {
  std::string terminators = ".!?";
  std::vector<std::string> abbreviations = {"Mr", "Mrs", "No", "St", "Co", "Ltd"};
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 535;

  void validate() const {
    if (terminators.empty()) throw UsageError("segmentation: terminator set is empty");
    if (min_tokens < 1) throw UsageError("segmentation: min_tokens must be >= 1");
    if (max_tokens < 2 * min_tokens) {
      throw UsageError("segmentation: max_tokens must be at least twice min_tokens");
    }
  }
};

struct CorpusStats {
  std::size_t total_sentences = 0;
  double avg_len = 0.0;
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  std::size_t under_5 = 0;
  std::size_t over_25 = 0;

  bool operator==(const CorpusStats&) const = default;
};

inline std::string make_sentence_id(std::string_view doc_id, std::size_t ordinal) {
  return std::string(doc_id) + "#" + std::to_string(ordinal);
}

namespace detail {

inline void check_document_text(const std::string& text, const std::string& where) {
  if (split_whitespace(text).empty()) throw DataError(where + ": document text is empty");
}

inline std::vector<Document> load_jsonl_documents(const std::filesystem::path& path,
                                                  const std::string& label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file " + path.string());
  std::vector<Document> docs;
  std::map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_whitespace(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed jsonl record (" + e.what() + ")");
    }
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string() ||
        !record.contains("text") || !record["text"].is_string()) {
      throw DataError(where + ": malformed jsonl record (need string fields \"id\" and \"text\")");
    }
    Document doc;
    doc.doc_id = record["id"].get<std::string>();
    doc.text = record["text"].get<std::string>();
    doc.corpus_label = label;
    doc.source_path = path.string();
    if (record.contains("date")) {
      if (!record["date"].is_string()) throw DataError(where + ": \"date\" must be a string");
      doc.date = record["date"].get<std::string>();
    }
    auto [it, inserted] = first_line.emplace(doc.doc_id, line_no);
    if (!inserted) {
      throw DataError(path.string() + ": duplicate doc_id '" + doc.doc_id + "' on lines " +
                      std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    check_document_text(doc.text, where);
    docs.push_back(std::move(doc));
  }
  return docs;
}

inline std::vector<Document> load_plain_dir_documents(const std::filesystem::path& dir,
                                                      const std::string& label) {
  std::vector<Document> docs;
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw DataError("cannot list corpus directory " + dir.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    Document doc;
    doc.doc_id = entry.path().stem().string();
    doc.text = read_file(entry.path());
    doc.corpus_label = label;
    doc.source_path = entry.path().string();
    check_document_text(doc.text, doc.source_path);
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace detail

inline Corpus load_corpus(const std::filesystem::path& path, const std::string& label,
                          CorpusFormat format) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) throw DataError("corpus path does not exist: " + path.string());
  Corpus corpus;
  corpus.label = label;
  if (format == CorpusFormat::jsonl) {
    if (std::filesystem::is_directory(path)) throw DataError(path.string() + " is a directory, expected jsonl");
    corpus.documents = detail::load_jsonl_documents(path, label);
  } else {
    if (!std::filesystem::is_directory(path)) throw DataError(path.string() + " is not a directory");
    corpus.documents = detail::load_plain_dir_documents(path, label);
  }
  std::sort(corpus.documents.begin(), corpus.documents.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  return corpus;
}

// Directories load as plain_dir, everything else as jsonl.
inline CorpusFormat detect_format(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? CorpusFormat::plain_dir : CorpusFormat::jsonl;
}

namespace detail {

struct TokenSpan {
  std::size_t begin;
  std::size_t end;
  std::size_t size() const { return end - begin; }
};

inline UChar32 last_code_point(std::string_view s) {
  UChar32 last = 0;
  for_each_code_point(s, [&](UChar32 c, std::size_t, std::size_t) { last = c; });
  return last;
}

inline UChar32 first_code_point(std::string_view s) {
  if (s.empty()) return 0;
  UChar32 first = 0;
  bool done = false;
  for_each_code_point(s.substr(0, std::min<std::size_t>(s.size(), 4)),
                      [&](UChar32 c, std::size_t, std::size_t) {
                        if (!done) first = c;
                        done = true;
                      });
  return first;
}

class Segmenter {
 public:
  explicit Segmenter(const SegmentationConfig& config) : config_(config) {
    config_.validate();
    for_each_code_point(config_.terminators,
                        [&](UChar32 c, std::size_t, std::size_t) { terminators_.push_back(c); });
  }

  bool is_terminator(UChar32 c) const {
    return std::find(terminators_.begin(), terminators_.end(), c) != terminators_.end();
  }

  bool ends_with_terminator(std::string_view token) const { return is_terminator(last_code_point(token)); }

  // A token like "Mr." or "(Ltd." that must not end a sentence.
  bool is_guarded_abbreviation(std::string_view token) const {
    if (token.empty() || token.back() != '.') return false;
    std::size_t end = token.size();
    while (end > 0 && token[end - 1] == '.') --end;
    std::size_t begin = 0;
    while (begin < end && (token[begin] == '(' || token[begin] == '"' || token[begin] == '\'' ||
                           token[begin] == '[')) {
      ++begin;
    }
    const std::string_view word = token.substr(begin, end - begin);
    return std::find(config_.abbreviations.begin(), config_.abbreviations.end(), word) !=
           config_.abbreviations.end();
  }

  std::vector<TokenSpan> split(const std::vector<std::string_view>& tokens) const {
    std::vector<TokenSpan> pieces;
    std::size_t start = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!ends_with_terminator(tokens[i]) || is_guarded_abbreviation(tokens[i])) continue;
      const bool at_end = i + 1 == tokens.size();
      if (at_end || is_upper(first_code_point(tokens[i + 1]))) {
        pieces.push_back({start, i + 1});
        start = i + 1;
      }
    }
    if (start < tokens.size()) pieces.push_back({start, tokens.size()});
    return pieces;
  }

  // Short fragments join the preceding sentence, or the following one when
  // nothing precedes them. A document shorter than min_tokens yields nothing.
  std::vector<TokenSpan> merge_short(const std::vector<TokenSpan>& pieces) const {
    std::vector<TokenSpan> out;
    std::optional<std::size_t> pending_begin;
    for (TokenSpan piece : pieces) {
      if (pending_begin) {
        piece.begin = *pending_begin;
        pending_begin.reset();
      }
      if (piece.size() >= config_.min_tokens) {
        out.push_back(piece);
      } else if (!out.empty()) {
        out.back().end = piece.end;
      } else {
        pending_begin = piece.begin;
      }
    }
    return out;
  }

  // Splits over-long sentences at the last terminator inside the window,
  // falling back to a hard split at max_tokens.
  void split_long(const std::vector<std::string_view>& tokens, TokenSpan span,
                  std::vector<TokenSpan>& out) const {
    const std::size_t min = config_.min_tokens;
    while (span.size() > config_.max_tokens) {
      const std::size_t limit = span.begin + config_.max_tokens;
      std::size_t cut = limit;
      // j is a cut position: the first piece ends with token j-1.
      for (std::size_t j = limit; j >= span.begin + min; --j) {
        if (span.end - j >= min && ends_with_terminator(tokens[j - 1])) {
          cut = j;
          break;
        }
      }
      if (span.end - cut < min) cut = span.end - min;
      out.push_back({span.begin, cut});
      span.begin = cut;
    }
    out.push_back(span);
  }

 private:
  SegmentationConfig config_;
  std::vector<UChar32> terminators_;
};

}  // namespace detail

inline std::vector<Sentence> segment_sentences(const Document& doc,
                                               const SegmentationConfig& rules = {}) {
  const detail::Segmenter segmenter(rules);
  const std::string text = detail::normalize_text(doc.text);
  const std::vector<std::string_view> tokens = detail::split_whitespace(text);
  std::vector<detail::TokenSpan> spans;
  for (const auto& merged : segmenter.merge_short(segmenter.split(tokens))) {
    segmenter.split_long(tokens, merged, spans);
  }
  std::vector<Sentence> sentences;
  sentences.reserve(spans.size());
  for (const auto& span : spans) {
    const char* first = tokens[span.begin].data();
    const char* last = tokens[span.end - 1].data() + tokens[span.end - 1].size();
    Sentence s;
    s.ordinal = sentences.size();
    s.doc_id = doc.doc_id;
    s.sentence_id = make_sentence_id(doc.doc_id, s.ordinal);
    s.text.assign(first, last);
    s.token_count = span.size();
    sentences.push_back(std::move(s));
  }
  return sentences;
}

// Segments every document in order and stores the result in corpus.sentences.
inline Corpus segment_corpus(Corpus corpus, const SegmentationConfig& rules = {}) {
  corpus.sentences.clear();
  for (const auto& doc : corpus.documents) {
    auto sentences = segment_sentences(doc, rules);
    std::move(sentences.begin(), sentences.end(), std::back_inserter(corpus.sentences));
  }
  return corpus;
}

inline CorpusStats corpus_stats(std::span<const Sentence> sentences) {
  if (sentences.empty()) throw DataError("corpus_stats: corpus has no sentences");
  CorpusStats stats;
  stats.total_sentences = sentences.size();
  stats.min_len = std::numeric_limits<std::size_t>::max();
  std::size_t total_tokens = 0;
  for (const auto& s : sentences) {
    total_tokens += s.token_count;
    stats.min_len = std::min(stats.min_len, s.token_count);
    stats.max_len = std::max(stats.max_len, s.token_count);
    if (s.token_count < 5) ++stats.under_5;
    if (s.token_count > 25) ++stats.over_25;
  }
  stats.avg_len = static_cast<double>(total_tokens) / static_cast<double>(sentences.size());
  return stats;
}

inline CorpusStats corpus_stats(const Corpus& corpus) { return corpus_stats(corpus.sentences); }

inline void write_sentences_jsonl(std::ostream& os, std::span<const Sentence> sentences) {
  for (const auto& s : sentences) {
    nlohmann::ordered_json j;
    j["sentence_id"] = s.sentence_id;
    j["doc_id"] = s.doc_id;
    j["ordinal"] = s.ordinal;
    j["text"] = s.text;
    j["token_count"] = s.token_count;
    os << j.dump() << '\n';
  }
}

inline std::vector<Sentence> read_sentences_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read sentence file " + path.string());
  std::vector<Sentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::split_whitespace(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Sentence s;
      s.sentence_id = j.at("sentence_id").get<std::string>();
      s.doc_id = j.at("doc_id").get<std::string>();
      s.ordinal = j.at("ordinal").get<std::size_t>();
      s.text = j.at("text").get<std::string>();
      s.token_count = j.at("token_count").get<std::size_t>();
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed sentence record (" +
                      e.what() + ")");
    }
  }
  return out;
}

inline void write_corpus_stats_csv(std::ostream& os,
                                   const std::vector<std::pair<std::string, CorpusStats>>& rows) {
  detail::write_csv_row(os, {"label", "total_sentences", "avg_len", "min_len", "max_len", "under_5", "over_25"});
  for (const auto& [label, s] : rows) {
    detail::write_csv_row(os, {label, std::to_string(s.total_sentences), detail::format_fixed(s.avg_len, 2),
                               std::to_string(s.min_len), std::to_string(s.max_len),
                               std::to_string(s.under_5), std::to_string(s.over_25)});
  }
}

}  // namespace corpuslens
