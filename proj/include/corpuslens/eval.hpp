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

// Topic-model quality metrics, the Error-Size sweep filter, sweep summaries
// and candidate-vs-sweep comparison.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "corpuslens/detail/csv.hpp"
#include "corpuslens/error.hpp"
#include "corpuslens/lexstats.hpp"
#include "corpuslens/topics.hpp"

namespace corpuslens {

// Name of the PUV formula, emitted next to every PUV value.
inline constexpr std::string_view kPuvFormula = "keyword_jaccard";

struct ModelMetrics {
  double gini = 0.0;
  double appearance_pct = 0.0;
  std::uint64_t topic20_size = 0;
  double puv = 0.0;
  double ngram_value = 0.0;

  bool operator==(const ModelMetrics&) const = default;
};

enum class Metric { gini, appearance_pct, topic20_size, puv, ngram_value };

inline constexpr std::array<Metric, 5> kAllMetrics = {Metric::gini, Metric::appearance_pct, Metric::topic20_size,
                                                      Metric::puv, Metric::ngram_value};

inline std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::gini: return "gini";
    case Metric::appearance_pct: return "appearance_pct";
    case Metric::topic20_size: return "topic20_size";
    case Metric::puv: return "puv";
    case Metric::ngram_value: return "ngram_value";
  }
  return "";
}

inline double metric_value(const ModelMetrics& m, Metric which) {
  switch (which) {
    case Metric::gini: return m.gini;
    case Metric::appearance_pct: return m.appearance_pct;
    case Metric::topic20_size: return static_cast<double>(m.topic20_size);
    case Metric::puv: return m.puv;
    case Metric::ngram_value: return m.ngram_value;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Single-model metrics.

// Gini coefficient of a multiset of sizes; 0 means perfectly even.
inline double gini_of_sizes(std::vector<double> sizes) {
  if (sizes.empty()) throw DataError("gini: no topics");
  std::sort(sizes.begin(), sizes.end());
  const double t = static_cast<double>(sizes.size());
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    total += sizes[i];
    weighted += (2.0 * static_cast<double>(i + 1) - t - 1.0) * sizes[i];
  }
  if (total <= 0.0) throw DataError("gini: topic sizes sum to zero");
  return weighted / (t * total);
}

inline double gini_score(const TopicAssignment& assignment) {
  std::vector<double> sizes;
  for (const auto& [topic, size] : assignment.topic_sizes()) sizes.push_back(static_cast<double>(size));
  if (sizes.empty()) throw DataError("gini: assignment has no non-noise topics");
  return gini_of_sizes(std::move(sizes));
}

inline double appearance_percentage(const TopicAssignment& assignment) {
  if (assignment.empty()) throw DataError("appearance percentage: empty assignment");
  const auto assigned = assignment.size() - assignment.noise_count();
  return 100.0 * static_cast<double>(assigned) / static_cast<double>(assignment.size());
}

inline double noise_percentage(const TopicAssignment& assignment) {
  if (assignment.empty()) throw DataError("noise percentage: empty assignment");
  return 100.0 * static_cast<double>(assignment.noise_count()) / static_cast<double>(assignment.size());
}

enum class RankMode { single_rank, cumulative };

// single_rank: size of the rank-th largest topic (0 if there are fewer).
// cumulative: total size of the top `rank` topics.
inline std::uint64_t topic_rank_size(const TopicAssignment& assignment, std::size_t rank = 20,
                                     RankMode mode = RankMode::single_rank) {
  if (rank < 1) throw UsageError("topic rank must be >= 1");
  std::vector<std::size_t> sizes;
  for (const auto& [topic, size] : assignment.topic_sizes()) sizes.push_back(size);
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  if (mode == RankMode::single_rank) return rank <= sizes.size() ? sizes[rank - 1] : 0;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < sizes.size() && i < rank; ++i) total += sizes[i];
  return total;
}

// 1 - mean pairwise Jaccard similarity of the topics' top-k term sets.
inline double puv(std::span<const TopicKeywords> keywords, std::size_t k = 10) {
  if (keywords.size() < 2) throw DataError("puv needs at least two topics");
  std::vector<std::set<std::string>> sets;
  for (const auto& kw : keywords) {
    std::set<std::string> s;
    for (std::size_t i = 0; i < kw.terms.size() && i < k; ++i) s.insert(kw.terms[i].term);
    sets.push_back(std::move(s));
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      std::size_t shared = 0;
      for (const auto& t : sets[i]) shared += sets[j].count(t);
      const std::size_t uni = sets[i].size() + sets[j].size() - shared;
      sum += uni == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni);
      ++pairs;
    }
  }
  return 1.0 - sum / static_cast<double>(pairs);
}

// Share of topic keywords (with multiplicity across topics) found among the
// top_m most frequent corpus bigrams. A bigram keyword must be one of those
// bigrams; a unigram keyword must be a component word of one.
inline double ngram_value(std::span<const TopicKeywords> keywords, const FrequencyTable& bigram_table,
                          std::size_t top_m = 500) {
  if (bigram_table.order() != 2) throw UsageError("ngram_value needs a bigram table");
  std::set<std::string> top_bigrams;
  std::set<std::string> component_words;
  for (const auto& [bigram, count] : bigram_table.top(top_m)) {
    top_bigrams.insert(bigram);
    const auto space = bigram.find(' ');
    component_words.insert(bigram.substr(0, space));
    if (space != std::string::npos) component_words.insert(bigram.substr(space + 1));
  }
  std::size_t total = 0;
  std::size_t matched = 0;
  for (const auto& kw : keywords) {
    for (const auto& term : kw.terms) {
      ++total;
      const bool is_bigram = term.term.find(' ') != std::string::npos;
      matched += is_bigram ? top_bigrams.count(term.term) : component_words.count(term.term);
    }
  }
  if (total == 0) throw DataError("ngram_value: keyword lists are empty");
  return static_cast<double>(matched) / static_cast<double>(total);
}

struct MetricOptions {
  std::size_t topic_rank = 20;
  RankMode rank_mode = RankMode::single_rank;
  std::size_t puv_k = 10;
  std::size_t ngram_top_m = 500;
};

inline ModelMetrics evaluate_model(const TopicAssignment& assignment, std::span<const TopicKeywords> keywords,
                                   const FrequencyTable& bigram_table, const MetricOptions& options = {}) {
  ModelMetrics m;
  m.gini = gini_score(assignment);
  m.appearance_pct = appearance_percentage(assignment);
  m.topic20_size = topic_rank_size(assignment, options.topic_rank, options.rank_mode);
  m.puv = puv(keywords, options.puv_k);
  m.ngram_value = ngram_value(keywords, bigram_table, options.ngram_top_m);
  return m;
}

inline void write_metrics_csv(std::ostream& os, const ModelMetrics& m, const MetricOptions& options = {}) {
  const std::string rank_formula =
      std::string(options.rank_mode == RankMode::single_rank ? "single_rank@" : "cumulative@") +
      std::to_string(options.topic_rank);
  detail::write_csv_row(os, {"metric", "value", "formula"});
  detail::write_csv_row(os, {"gini", detail::format_fixed(m.gini, 2), "mean_abs_difference"});
  detail::write_csv_row(os, {"appearance_pct", detail::format_fixed(m.appearance_pct, 2), "non_noise_share"});
  detail::write_csv_row(os, {"topic20_size", std::to_string(m.topic20_size), rank_formula});
  detail::write_csv_row(os, {"puv", detail::format_fixed(m.puv, 2),
                             std::string(kPuvFormula) + "@" + std::to_string(options.puv_k)});
  detail::write_csv_row(os, {"ngram_value", detail::format_fixed(m.ngram_value, 2),
                             "top" + std::to_string(options.ngram_top_m) + "_bigram_cover"});
}

// ---------------------------------------------------------------------------
// Sweeps.

struct RunRecord {
  std::string run_id;
  nlohmann::json params = nlohmann::json::object();
  ModelMetrics metrics;
};

inline nlohmann::ordered_json to_json(const ModelMetrics& m) {
  nlohmann::ordered_json j;
  j["gini"] = m.gini;
  j["appearance_pct"] = m.appearance_pct;
  j["topic20_size"] = m.topic20_size;
  j["puv"] = m.puv;
  j["ngram_value"] = m.ngram_value;
  return j;
}

inline void write_run_records_jsonl(std::ostream& os, std::span<const RunRecord> runs) {
  for (const auto& r : runs) {
    nlohmann::ordered_json j;
    j["run_id"] = r.run_id;
    j["params"] = r.params;
    j["metrics"] = to_json(r.metrics);
    os << j.dump() << '\n';
  }
}

inline std::vector<RunRecord> read_run_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read run records " + path.string());
  std::vector<RunRecord> runs;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    RunRecord r;
    try {
      const auto j = nlohmann::json::parse(line);
      r.run_id = j.at("run_id").get<std::string>();
      if (j.contains("params")) r.params = j["params"];
      const auto& m = j.at("metrics");
      r.metrics.gini = m.at("gini").get<double>();
      r.metrics.appearance_pct = m.at("appearance_pct").get<double>();
      const double t20 = m.at("topic20_size").get<double>();
      if (t20 < 0 || std::floor(t20) != t20) throw DataError(where + ": topic20_size must be a non-negative integer");
      r.metrics.topic20_size = static_cast<std::uint64_t>(t20);
      r.metrics.puv = m.at("puv").get<double>();
      r.metrics.ngram_value = m.at("ngram_value").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed run record (" + e.what() + ")");
    }
    for (Metric metric : kAllMetrics) {
      if (!std::isfinite(metric_value(r.metrics, metric))) {
        throw DataError(where + ": metric " + std::string(metric_name(metric)) + " is not finite");
      }
    }
    if (!ids.insert(r.run_id).second) throw DataError(where + ": duplicate run_id '" + r.run_id + "'");
    runs.push_back(std::move(r));
  }
  return runs;
}

enum class BandMode { relative, absolute };

// Relative: mean * (1 +/- width/100). Absolute: mean +/- width percentage points.
struct ErrorSizeBand {
  BandMode mode = BandMode::relative;
  double width = 10.0;
};

struct ErrorSizeResult {
  std::vector<RunRecord> kept;
  std::vector<RunRecord> rejected;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

inline std::pair<double, double> band_bounds(double mean, const ErrorSizeBand& band) {
  if (band.mode == BandMode::relative) {
    const double delta = std::abs(mean) * band.width / 100.0;
    return {mean - delta, mean + delta};
  }
  return {mean - band.width, mean + band.width};
}

// Bounds come from the full input, never from the kept subset.
inline ErrorSizeResult error_size_filter(std::span<const RunRecord> runs, const ErrorSizeBand& band = {}) {
  if (runs.size() < 2) throw DataError("error-size filter needs at least two runs");
  ErrorSizeResult out;
  double sum = 0.0;
  for (const auto& r : runs) sum += r.metrics.appearance_pct;
  out.mean = sum / static_cast<double>(runs.size());
  std::tie(out.lower, out.upper) = band_bounds(out.mean, band);
  for (const auto& r : runs) {
    const double a = r.metrics.appearance_pct;
    (a >= out.lower && a <= out.upper ? out.kept : out.rejected).push_back(r);
  }
  return out;
}

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

struct SweepSummary {
  std::array<MetricSummary, 5> metrics{};
  std::size_t run_count = 0;

  const MetricSummary& operator[](Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
  MetricSummary& operator[](Metric m) { return metrics[static_cast<std::size_t>(m)]; }
};

// Welford's single-pass update.
inline SweepSummary sweep_summary(std::span<const RunRecord> runs) {
  if (runs.empty()) throw DataError("sweep summary needs at least one run");
  SweepSummary s;
  s.run_count = runs.size();
  for (Metric metric : kAllMetrics) {
    double mean = 0.0;
    double m2 = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (const auto& r : runs) {
      const double x = metric_value(r.metrics, metric);
      ++count;
      const double delta = x - mean;
      mean += delta / static_cast<double>(count);
      m2 += delta * (x - mean);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    // Rounding can leave the running mean an ulp outside [min, max].
    s[metric] = {std::clamp(mean, lo, hi), std::sqrt(std::max(0.0, m2 / static_cast<double>(count))), lo, hi};
  }
  return s;
}

enum class Verdict { better, worse, at_mean, within_band, outside_band };

inline std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::better: return "better than mean";
    case Verdict::worse: return "worse than mean";
    case Verdict::at_mean: return "at mean";
    case Verdict::within_band: return "within error band";
    case Verdict::outside_band: return "outside error band";
  }
  return "";
}

enum class Direction { lower_is_better, higher_is_better, near_mean };

inline Direction metric_direction(Metric m) {
  switch (m) {
    case Metric::gini: return Direction::lower_is_better;
    case Metric::appearance_pct: return Direction::near_mean;
    default: return Direction::higher_is_better;
  }
}

struct MetricVerdict {
  Metric metric = Metric::gini;
  double candidate = 0.0;
  MetricSummary summary;
  Verdict verdict = Verdict::at_mean;
};

inline bool same_value(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

// One verdict per metric, in kAllMetrics order.
inline std::vector<MetricVerdict> compare_to_sweep(const ModelMetrics& candidate, const SweepSummary& summary,
                                                   const ErrorSizeBand& band = {}) {
  std::vector<MetricVerdict> out;
  for (Metric metric : kAllMetrics) {
    MetricVerdict v;
    v.metric = metric;
    v.candidate = metric_value(candidate, metric);
    v.summary = summary[metric];
    const double mean = v.summary.mean;
    if (same_value(v.candidate, mean)) {
      v.verdict = Verdict::at_mean;
    } else {
      switch (metric_direction(metric)) {
        case Direction::lower_is_better:
          v.verdict = v.candidate < mean ? Verdict::better : Verdict::worse;
          break;
        case Direction::higher_is_better:
          v.verdict = v.candidate > mean ? Verdict::better : Verdict::worse;
          break;
        case Direction::near_mean: {
          const auto [lo, hi] = band_bounds(mean, band);
          v.verdict = v.candidate >= lo && v.candidate <= hi ? Verdict::within_band : Verdict::outside_band;
          break;
        }
      }
    }
    out.push_back(v);
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, std::span<const MetricVerdict> verdicts) {
  detail::write_csv_row(os, {"metric", "candidate", "mean", "std", "min", "max", "verdict"});
  for (const auto& v : verdicts) {
    const std::string candidate = v.metric == Metric::topic20_size
                                      ? std::to_string(static_cast<std::uint64_t>(v.candidate))
                                      : detail::format_fixed(v.candidate, 2);
    detail::write_csv_row(os, {metric_name(v.metric), candidate, detail::format_fixed(v.summary.mean, 2),
                               detail::format_fixed(v.summary.std, 2), detail::format_fixed(v.summary.min, 2),
                               detail::format_fixed(v.summary.max, 2), verdict_name(v.verdict)});
  }
}

struct RankedRun {
  RunRecord run;
  double composite = 0.0;
};

// Composite = z(topic20) + z(ngram_value) + z(puv) - z(gini), descending;
// ties by run_id. A metric with zero spread contributes 0.
inline std::vector<RankedRun> rank_runs(std::span<const RunRecord> runs) {
  std::vector<RankedRun> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back({r, 0.0});
  if (runs.size() < 2) return out;
  const SweepSummary s = sweep_summary(runs);
  auto z = [&](const RunRecord& r, Metric m) {
    const auto& ms = s[m];
    return ms.std > 0.0 ? (metric_value(r.metrics, m) - ms.mean) / ms.std : 0.0;
  };
  for (auto& rr : out) {
    rr.composite = z(rr.run, Metric::topic20_size) + z(rr.run, Metric::ngram_value) + z(rr.run, Metric::puv) -
                   z(rr.run, Metric::gini);
  }
  std::sort(out.begin(), out.end(), [](const RankedRun& a, const RankedRun& b) {
    return a.composite != b.composite ? a.composite > b.composite : a.run.run_id < b.run.run_id;
  });
  return out;
}

}  // namespace corpuslens
