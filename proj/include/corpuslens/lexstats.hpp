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

// Tokenization, n-gram frequency tables, percentile ranks and the
// cross-corpus top-k term comparison.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpuslens/detail/csv.hpp"
#include "corpuslens/detail/text.hpp"
#include "corpuslens/error.hpp"
#include "corpuslens/ingest.hpp"
#include "corpuslens/stopwords.hpp"

namespace corpuslens {

struct TokenizerConfig {
  bool lowercase = true;
  bool strip_punctuation = true;
  std::set<std::string> stopwords = default_stopwords();
  std::size_t min_token_chars = 2;
};

// Applies, in order: lowercasing, punctuation stripping (punctuation acts as a
// token separator, so "union's" yields "union" and "s"), stopword removal and
// the minimum-length filter.
inline std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config = {}) {
  std::vector<std::string> out;
  auto emit = [&](std::string token) {
    if (token.empty()) return;
    if (config.stopwords.count(token) != 0) return;
    if (detail::code_point_count(token) < config.min_token_chars) return;
    out.push_back(std::move(token));
  };
  for (std::string_view raw : detail::split_whitespace(text)) {
    std::string token = config.lowercase ? detail::to_lower(raw) : std::string(raw);
    if (!config.strip_punctuation) {
      emit(std::move(token));
      continue;
    }
    std::string piece;
    detail::for_each_code_point(token, [&](UChar32 c, std::size_t off, std::size_t len) {
      if (detail::is_punct(c)) {
        emit(std::move(piece));
        piece.clear();
      } else {
        piece.append(token, off, len);
      }
    });
    emit(std::move(piece));
  }
  return out;
}

using TermCounts = std::map<std::string, std::uint64_t>;

// Immutable n-gram -> count map. Bigram terms are two tokens joined by one space.
class FrequencyTable {
 public:
  FrequencyTable() = default;

  FrequencyTable(std::string corpus_label, int order, TermCounts entries)
      : label_(std::move(corpus_label)), order_(order), entries_(std::move(entries)) {
    if (order_ != 1 && order_ != 2) throw UsageError("n-gram order must be 1 or 2");
    sorted_counts_.reserve(entries_.size());
    for (const auto& [term, count] : entries_) {
      if (count == 0) throw DataError("frequency table entry '" + term + "' has count 0");
      total_ += count;
      sorted_counts_.push_back(count);
    }
    std::sort(sorted_counts_.begin(), sorted_counts_.end());
  }

  const std::string& corpus_label() const noexcept { return label_; }
  int order() const noexcept { return order_; }
  const TermCounts& entries() const noexcept { return entries_; }
  std::uint64_t total_tokens() const noexcept { return total_; }
  std::size_t vocab_size() const noexcept { return entries_.size(); }

  std::optional<std::uint64_t> count(std::string_view term) const {
    auto it = entries_.find(std::string(term));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view term) const { return count(term).has_value(); }

  // 100 * |{types with count <= count(term)}| / vocab_size.
  double percentile(std::string_view term) const {
    const auto c = count(term);
    if (!c) throw TermNotFound(std::string(term));
    const auto at_or_below = std::upper_bound(sorted_counts_.begin(), sorted_counts_.end(), *c) -
                             sorted_counts_.begin();
    return 100.0 * static_cast<double>(at_or_below) / static_cast<double>(vocab_size());
  }

  // Terms by count descending, ties by term ascending.
  std::vector<std::pair<std::string, std::uint64_t>> top(std::size_t m) const {
    std::vector<std::pair<std::string, std::uint64_t>> all(entries_.begin(), entries_.end());
    auto by_count = [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    };
    if (m < all.size()) {
      std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m), all.end(), by_count);
      all.resize(m);
    } else {
      std::sort(all.begin(), all.end(), by_count);
    }
    return all;
  }

 private:
  std::string label_;
  int order_ = 1;
  TermCounts entries_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> sorted_counts_;
};

inline double percentile_rank(const FrequencyTable& table, std::string_view word) {
  return table.percentile(word);
}

namespace detail {

inline void add_ngrams(const std::vector<std::string>& tokens, int n, TermCounts& counts) {
  if (n == 1) {
    for (const auto& t : tokens) ++counts[t];
    return;
  }
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    std::string bigram;
    bigram.reserve(tokens[i].size() + tokens[i + 1].size() + 1);
    bigram.append(tokens[i]).append(" ").append(tokens[i + 1]);
    ++counts[bigram];
  }
}

}  // namespace detail

// Bigrams are formed from adjacent surviving tokens inside one sentence.
inline FrequencyTable count_ngrams(std::span<const Sentence> sentences, const std::string& label, int n,
                                   const TokenizerConfig& config = {}) {
  if (n != 1 && n != 2) throw UsageError("n-gram order must be 1 or 2");
  TermCounts counts;
  for (const auto& s : sentences) detail::add_ngrams(tokenize(s.text, config), n, counts);
  return FrequencyTable(label, n, std::move(counts));
}

inline FrequencyTable count_ngrams(const Corpus& corpus, int n, const TokenizerConfig& config = {}) {
  return count_ngrams(corpus.sentences, corpus.label, n, config);
}

// True when the share strictly exceeds 1% of the table's token total.
inline bool significance_flag(std::uint64_t term_or_group_count, const FrequencyTable& table) {
  if (table.total_tokens() == 0) throw UsageError("significance_flag: table has no tokens");
  return static_cast<unsigned __int128>(term_or_group_count) * 100u >
         static_cast<unsigned __int128>(table.total_tokens());
}

struct TermStat {
  std::uint64_t count = 0;
  double percentile = 0.0;
};

// Per-term (count, percentile) pairs. Usually derived from a FrequencyTable,
// but can also be filled from published figures.
struct RankedVocabulary {
  int order = 1;
  std::map<std::string, TermStat> terms;
};

inline RankedVocabulary ranked_vocabulary(const FrequencyTable& table) {
  RankedVocabulary out;
  out.order = table.order();
  for (const auto& [term, count] : table.entries()) out.terms[term] = {count, table.percentile(term)};
  return out;
}

struct ComparisonRow {
  std::string word;
  std::uint64_t count_a = 0;
  double percentile_a = 0.0;
  std::uint64_t count_b = 0;
  double percentile_b = 0.0;
  double diff = 0.0;  // percentile_b - percentile_a
};

enum class SortBy { a_count, b_count };

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  std::size_t requested = 0;
  std::vector<std::string> warnings;

  bool shortfall() const { return rows.size() < requested; }
};

// Top-k terms of the sort_by corpus that also occur in the other corpus,
// ordered by that corpus's count descending (ties by term).
inline ComparisonResult compare_top_k(const RankedVocabulary& a, const RankedVocabulary& b, std::size_t k = 20,
                                      SortBy sort_by = SortBy::b_count) {
  if (a.order != b.order) throw UsageError("compare_top_k: tables have different n-gram orders");
  const RankedVocabulary& primary = sort_by == SortBy::b_count ? b : a;
  const RankedVocabulary& other = sort_by == SortBy::b_count ? a : b;

  std::vector<const std::pair<const std::string, TermStat>*> shared;
  for (const auto& entry : primary.terms) {
    if (other.terms.count(entry.first) != 0) shared.push_back(&entry);
  }
  std::sort(shared.begin(), shared.end(), [](const auto* x, const auto* y) {
    return x->second.count != y->second.count ? x->second.count > y->second.count : x->first < y->first;
  });

  ComparisonResult result;
  result.requested = k;
  for (std::size_t i = 0; i < shared.size() && i < k; ++i) {
    const std::string& word = shared[i]->first;
    const TermStat& sa = a.terms.at(word);
    const TermStat& sb = b.terms.at(word);
    result.rows.push_back({word, sa.count, sa.percentile, sb.count, sb.percentile, sb.percentile - sa.percentile});
  }
  if (result.shortfall()) {
    result.warnings.push_back("only " + std::to_string(result.rows.size()) + " shared terms, fewer than k=" +
                              std::to_string(k));
  }
  return result;
}

inline ComparisonResult compare_top_k(const FrequencyTable& a, const FrequencyTable& b, std::size_t k = 20,
                                      SortBy sort_by = SortBy::b_count) {
  if (a.order() != b.order()) throw UsageError("compare_top_k: tables have different n-gram orders");
  return compare_top_k(ranked_vocabulary(a), ranked_vocabulary(b), k, sort_by);
}

inline void write_frequency_csv(std::ostream& os, const FrequencyTable& table) {
  detail::write_csv_row(os, {"term", "count"});
  for (const auto& [term, count] : table.top(table.vocab_size())) {
    detail::write_csv_row(os, {term, std::to_string(count)});
  }
}

inline FrequencyTable read_frequency_csv(const std::filesystem::path& path, const std::string& label, int order) {
  TermCounts counts;
  for (const auto& row : detail::read_csv_file(path, {"term", "count"})) {
    const auto c = detail::parse_int(row[1], "count");
    if (c < 1) throw DataError(path.string() + ": count for '" + row[0] + "' must be >= 1");
    if (!counts.emplace(row[0], static_cast<std::uint64_t>(c)).second) {
      throw DataError(path.string() + ": duplicate term '" + row[0] + "'");
    }
  }
  return FrequencyTable(label, order, std::move(counts));
}

inline void write_comparison_csv(std::ostream& os, std::span<const ComparisonRow> rows) {
  detail::write_csv_row(os, {"word", "count_a", "percentile_a", "count_b", "percentile_b", "diff"});
  for (const auto& r : rows) {
    detail::write_csv_row(os, {r.word, std::to_string(r.count_a), detail::format_fixed(r.percentile_a, 2),
                               std::to_string(r.count_b), detail::format_fixed(r.percentile_b, 2),
                               detail::format_fixed(r.diff, 2)});
  }
}

}  // namespace corpuslens
