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

// Cross-model comparison: keyword overlap against each model's keyword pool,
// thematic grouping of human-labelled topics, and the side-by-side report.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpuslens/detail/csv.hpp"
#include "corpuslens/error.hpp"
#include "corpuslens/eval.hpp"
#include "corpuslens/ingest.hpp"
#include "corpuslens/lexstats.hpp"
#include "corpuslens/topics.hpp"

namespace corpuslens {

// Occurrence counts of every unigram and bigram candidate term in a corpus.
struct KeywordPool {
  std::string model_id;
  std::uint64_t total_pool = 0;
  TermCounts counts;
};

inline KeywordPool keyword_pool(const FrequencyTable& unigrams, const FrequencyTable& bigrams, std::string model_id) {
  if (unigrams.order() != 1 || bigrams.order() != 2) throw UsageError("keyword_pool: expected unigram and bigram tables");
  KeywordPool pool;
  pool.model_id = std::move(model_id);
  pool.counts = unigrams.entries();
  pool.counts.insert(bigrams.entries().begin(), bigrams.entries().end());
  pool.total_pool = unigrams.total_tokens() + bigrams.total_tokens();
  return pool;
}

inline KeywordPool keyword_pool(const Corpus& corpus, const TokenizerConfig& tok = {}) {
  return keyword_pool(count_ngrams(corpus, 1, tok), count_ngrams(corpus, 2, tok), corpus.label);
}

struct OverlapReport {
  std::vector<std::string> shared_terms;  // sorted
  std::uint64_t shared_mass_a = 0;
  std::uint64_t shared_mass_b = 0;
  std::uint64_t pool_a = 0;
  std::uint64_t pool_b = 0;
  double pct_a = 0.0;
  double pct_b = 0.0;
};

namespace detail {

inline std::set<std::string> keyword_union(std::span<const TopicKeywords> keywords) {
  std::set<std::string> out;
  for (const auto& kw : keywords) {
    for (const auto& t : kw.terms) out.insert(t.term);
  }
  return out;
}

inline std::uint64_t pool_count(const KeywordPool& pool, const std::string& term) {
  auto it = pool.counts.find(term);
  return it == pool.counts.end() ? 0 : it->second;
}

}  // namespace detail

// Shared = intersection of the two models' keyword unions; each percentage is
// the shared terms' occurrence mass over that model's pool.
inline OverlapReport keyword_overlap(std::span<const TopicKeywords> keywords_a, std::span<const TopicKeywords> keywords_b,
                                     const KeywordPool& pool_a, const KeywordPool& pool_b) {
  const auto union_a = detail::keyword_union(keywords_a);
  const auto union_b = detail::keyword_union(keywords_b);
  if (union_a.empty() || union_b.empty()) throw DataError("keyword_overlap: keyword lists are empty");
  OverlapReport report;
  std::set_intersection(union_a.begin(), union_a.end(), union_b.begin(), union_b.end(),
                        std::back_inserter(report.shared_terms));
  for (const auto& t : report.shared_terms) {
    report.shared_mass_a += detail::pool_count(pool_a, t);
    report.shared_mass_b += detail::pool_count(pool_b, t);
  }
  report.pool_a = pool_a.total_pool;
  report.pool_b = pool_b.total_pool;
  auto pct = [](std::uint64_t part, std::uint64_t whole) {
    return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
  };
  report.pct_a = pct(report.shared_mass_a, report.pool_a);
  report.pct_b = pct(report.shared_mass_b, report.pool_b);
  return report;
}

inline void write_overlap_csv(std::ostream& os, const OverlapReport& r, const std::string& label_a,
                              const std::string& label_b) {
  detail::write_csv_row(os, {"model", "shared_keywords", "shared_mass", "total_pool", "pct_of_pool"});
  detail::write_csv_row(os, {label_a, std::to_string(r.shared_terms.size()), std::to_string(r.shared_mass_a),
                             std::to_string(r.pool_a), detail::format_fixed(r.pct_a, 2)});
  detail::write_csv_row(os, {label_b, std::to_string(r.shared_terms.size()), std::to_string(r.shared_mass_b),
                             std::to_string(r.pool_b), detail::format_fixed(r.pct_b, 2)});
}

// ---------------------------------------------------------------------------
// Thematic grouping.

struct ThematicGroup {
  std::string name;
  std::vector<std::string> topic_labels;
  std::string note;
};

struct ThematicGroupingConfig {
  std::vector<ThematicGroup> groups;

  // Each label may belong to at most one group.
  void validate() const {
    std::map<std::string, std::string> owner;
    for (const auto& g : groups) {
      for (const auto& label : g.topic_labels) {
        auto [it, inserted] = owner.emplace(label, g.name);
        if (!inserted) {
          throw DataError("topic label '" + label + "' is claimed by groups '" + it->second + "' and '" + g.name + "'");
        }
      }
    }
  }
};

struct GroupRow {
  std::string name;
  std::string note;
  std::vector<int> topics;
  std::vector<std::string> labels;
  std::size_t sentence_count = 0;
};

struct GroupingTable {
  std::vector<GroupRow> groups;  // config order
  GroupRow ungrouped;            // every non-noise topic no group claimed
};

inline constexpr std::string_view kUngroupedName = "ungrouped";

inline GroupingTable apply_thematic_grouping(const std::map<int, std::string>& labeled_topics,
                                             const ThematicGroupingConfig& config, const TopicAssignment& assignment) {
  config.validate();
  const auto sizes = assignment.topic_sizes();
  std::map<std::string, std::size_t> group_of_label;
  for (std::size_t g = 0; g < config.groups.size(); ++g) {
    for (const auto& label : config.groups[g].topic_labels) group_of_label[label] = g;
  }
  GroupingTable table;
  for (const auto& g : config.groups) table.groups.push_back({g.name, g.note, {}, {}, 0});
  table.ungrouped.name = kUngroupedName;

  auto size_of = [&](int topic) {
    auto it = sizes.find(topic);
    return it == sizes.end() ? std::size_t{0} : it->second;
  };
  std::set<int> placed;
  for (const auto& [topic, label] : labeled_topics) {
    if (topic == kNoiseTopic) continue;
    auto it = group_of_label.find(label);
    GroupRow& row = it == group_of_label.end() ? table.ungrouped : table.groups[it->second];
    row.topics.push_back(topic);
    row.labels.push_back(label);
    row.sentence_count += size_of(topic);
    placed.insert(topic);
  }
  for (const auto& [topic, size] : sizes) {
    if (placed.count(topic) != 0) continue;
    table.ungrouped.topics.push_back(topic);
    table.ungrouped.labels.emplace_back();
    table.ungrouped.sentence_count += size;
  }
  return table;
}

inline std::map<int, std::string> read_topic_labels_csv(const std::filesystem::path& path) {
  std::map<int, std::string> out;
  for (const auto& row : detail::read_csv_file(path, {"topic_id", "label"})) {
    const int topic = static_cast<int>(detail::parse_int(row[0], "topic_id"));
    if (!out.emplace(topic, row[1]).second) {
      throw DataError(path.string() + ": topic " + row[0] + " is labelled twice");
    }
  }
  return out;
}

inline void write_grouping_csv(std::ostream& os, const GroupingTable& table) {
  auto join_topics = [](const std::vector<int>& v) {
    std::string s;
    for (int t : v) s += (s.empty() ? "" : ";") + std::to_string(t);
    return s;
  };
  auto join_labels = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i == 0 ? "" : ";") + v[i];
    return s;
  };
  detail::write_csv_row(os, {"group", "topics", "labels", "sentence_count", "note"});
  auto emit = [&](const GroupRow& r) {
    detail::write_csv_row(os, {r.name, join_topics(r.topics), join_labels(r.labels), std::to_string(r.sentence_count),
                               r.note});
  };
  for (const auto& g : table.groups) emit(g);
  emit(table.ungrouped);
}

// ---------------------------------------------------------------------------
// Side-by-side report.

struct CorpusArtifacts {
  std::string label;
  std::optional<CorpusStats> stats;
  std::optional<ModelMetrics> metrics;
  std::string metrics_gap;  // why metrics are missing, when they are
};

struct ReportInputs {
  CorpusArtifacts a;
  CorpusArtifacts b;
  std::optional<ComparisonResult> frequency;
  std::optional<OverlapReport> overlap;
  std::string overlap_gap;
};

inline constexpr std::string_view kUnavailable = "unavailable";

// Markdown document with four sections: frequency comparison, corpus
// statistics, topic model metrics and keyword overlap. Missing artifacts are
// rendered as explicit gaps.
inline std::string side_by_side_report(const ReportInputs& in) {
  using detail::format_fixed;
  std::ostringstream md;
  md << "# Corpus comparison: " << in.a.label << " vs " << in.b.label << "\n\n";

  md << "## Frequency comparison\n\n";
  if (!in.frequency) {
    md << "_" << kUnavailable << ": no frequency tables_\n\n";
  } else {
    md << "| word | count_" << in.a.label << " | percentile_" << in.a.label << " | count_" << in.b.label
       << " | percentile_" << in.b.label << " | diff |\n";
    md << "|---|---:|---:|---:|---:|---:|\n";
    for (const auto& r : in.frequency->rows) {
      md << "| " << r.word << " | " << r.count_a << " | " << format_fixed(r.percentile_a, 2) << " | " << r.count_b
         << " | " << format_fixed(r.percentile_b, 2) << " | " << format_fixed(r.diff, 2) << " |\n";
    }
    for (const auto& w : in.frequency->warnings) md << "\n> warning: " << w << "\n";
    md << "\n";
  }

  md << "## Corpus statistics\n\n";
  md << "| corpus | total_sentences | avg_len | min_len | max_len | under_5 | over_25 |\n";
  md << "|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto* c : {&in.a, &in.b}) {
    if (!c->stats) {
      md << "| " << c->label << " | " << kUnavailable << " | | | | | |\n";
      continue;
    }
    const auto& s = *c->stats;
    md << "| " << c->label << " | " << s.total_sentences << " | " << format_fixed(s.avg_len, 2) << " | " << s.min_len
       << " | " << s.max_len << " | " << s.under_5 << " | " << s.over_25 << " |\n";
  }
  md << "\n";

  md << "## Topic model metrics\n\n";
  if (!in.a.metrics && !in.b.metrics) {
    md << "_" << kUnavailable << ": no topic assignments for either corpus_\n\n";
  } else {
    md << "| corpus | gini | appearance_pct | topic20_size | puv (" << kPuvFormula << ") | ngram_value |\n";
    md << "|---|---:|---:|---:|---:|---:|\n";
    for (const auto* c : {&in.a, &in.b}) {
      if (!c->metrics) {
        md << "| " << c->label << " | " << kUnavailable << " | " << kUnavailable << " | " << kUnavailable << " | "
           << kUnavailable << " | " << kUnavailable << " |\n";
        continue;
      }
      const auto& m = *c->metrics;
      md << "| " << c->label << " | " << format_fixed(m.gini, 2) << " | " << format_fixed(m.appearance_pct, 2) << " | "
         << m.topic20_size << " | " << format_fixed(m.puv, 2) << " | " << format_fixed(m.ngram_value, 2) << " |\n";
    }
    for (const auto* c : {&in.a, &in.b}) {
      if (!c->metrics) md << "\nMetrics " << kUnavailable << " for " << c->label << ": " << c->metrics_gap << "\n";
    }
    md << "\n";
  }

  md << "## Keyword overlap\n\n";
  if (!in.overlap) {
    md << "_" << kUnavailable << ": " << (in.overlap_gap.empty() ? "keywords missing" : in.overlap_gap) << "_\n";
  } else {
    const auto& o = *in.overlap;
    md << "Shared keywords: " << o.shared_terms.size() << "\n\n";
    md << "| model | shared_mass | total_pool | pct_of_pool |\n|---|---:|---:|---:|\n";
    md << "| " << in.a.label << " | " << o.shared_mass_a << " | " << o.pool_a << " | " << format_fixed(o.pct_a, 2)
       << " |\n";
    md << "| " << in.b.label << " | " << o.shared_mass_b << " | " << o.pool_b << " | " << format_fixed(o.pct_b, 2)
       << " |\n";
    if (!o.shared_terms.empty()) {
      md << "\nTerms: ";
      for (std::size_t i = 0; i < o.shared_terms.size(); ++i) md << (i ? ", " : "") << o.shared_terms[i];
      md << "\n";
    }
  }
  return md.str();
}

}  // namespace corpuslens
