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

// Topic assignments, the baseline spherical k-means clusterer, class-based
// TF-IDF keywords and 2-D projection for plot export.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "corpuslens/detail/csv.hpp"
#include "corpuslens/embedding.hpp"
#include "corpuslens/error.hpp"
#include "corpuslens/ingest.hpp"
#include "corpuslens/lexstats.hpp"

namespace corpuslens {

inline constexpr int kNoiseTopic = -1;

// sentence_id -> topic id, stored in sentence-index order. Topic -1 is noise.
class TopicAssignment {
 public:
  TopicAssignment() = default;

  TopicAssignment(std::vector<std::string> sentence_ids, std::vector<int> topics)
      : ids_(std::move(sentence_ids)), topics_(std::move(topics)) {
    if (ids_.size() != topics_.size()) throw DataError("assignment: id and topic counts differ");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (topics_[i] < kNoiseTopic) {
        throw DataError("assignment: topic id " + std::to_string(topics_[i]) + " for sentence '" + ids_[i] +
                        "' is below -1");
      }
      if (!position_.emplace(ids_[i], i).second) {
        throw DataError("assignment: sentence '" + ids_[i] + "' appears more than once");
      }
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const std::vector<std::string>& sentence_ids() const noexcept { return ids_; }
  const std::vector<int>& topics() const noexcept { return topics_; }

  std::optional<int> topic_of(const std::string& sentence_id) const {
    auto it = position_.find(sentence_id);
    if (it == position_.end()) return std::nullopt;
    return topics_[it->second];
  }

  // Non-noise topic -> sentence count.
  std::map<int, std::size_t> topic_sizes() const {
    std::map<int, std::size_t> sizes;
    for (int t : topics_) {
      if (t != kNoiseTopic) ++sizes[t];
    }
    return sizes;
  }

  std::size_t noise_count() const {
    return static_cast<std::size_t>(std::count(topics_.begin(), topics_.end(), kNoiseTopic));
  }

  bool operator==(const TopicAssignment& other) const { return ids_ == other.ids_ && topics_ == other.topics_; }

 private:
  std::vector<std::string> ids_;
  std::vector<int> topics_;
  std::map<std::string, std::size_t> position_;
};

// Renumbers non-noise topics 0..T-1 by descending size; equal sizes are
// ordered by their lexicographically smallest member sentence id.
inline TopicAssignment canonicalize(const TopicAssignment& a) {
  struct Info {
    std::size_t size = 0;
    const std::string* first_id = nullptr;
  };
  std::map<int, Info> info;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int t = a.topics()[i];
    if (t == kNoiseTopic) continue;
    auto& entry = info[t];
    ++entry.size;
    if (entry.first_id == nullptr || a.sentence_ids()[i] < *entry.first_id) entry.first_id = &a.sentence_ids()[i];
  }
  std::vector<std::pair<int, Info>> order(info.begin(), info.end());
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    return x.second.size != y.second.size ? x.second.size > y.second.size : *x.second.first_id < *y.second.first_id;
  });
  std::map<int, int> relabel;
  for (std::size_t r = 0; r < order.size(); ++r) relabel[order[r].first] = static_cast<int>(r);
  std::vector<int> topics = a.topics();
  for (int& t : topics) {
    if (t != kNoiseTopic) t = relabel.at(t);
  }
  return TopicAssignment(a.sentence_ids(), std::move(topics));
}

// Throws unless the assignment holds exactly the corpus's sentence ids.
inline void check_coverage(const TopicAssignment& a, std::span<const Sentence> sentences) {
  for (const auto& s : sentences) {
    if (!a.topic_of(s.sentence_id)) throw DataError("assignment has no topic for sentence '" + s.sentence_id + "'");
  }
  if (a.size() != sentences.size()) {
    throw DataError("assignment covers " + std::to_string(a.size()) + " sentences, corpus has " +
                    std::to_string(sentences.size()));
  }
}

inline void write_assignment_csv(std::ostream& os, const TopicAssignment& a) {
  detail::write_csv_row(os, {"sentence_id", "topic_id"});
  for (std::size_t i = 0; i < a.size(); ++i) {
    detail::write_csv_row(os, {a.sentence_ids()[i], std::to_string(a.topics()[i])});
  }
}

inline TopicAssignment read_assignment_csv(const std::filesystem::path& path) {
  std::vector<std::string> ids;
  std::vector<int> topics;
  for (auto& row : detail::read_csv_file(path, {"sentence_id", "topic_id"})) {
    ids.push_back(std::move(row[0]));
    topics.push_back(static_cast<int>(detail::parse_int(row[1], "topic_id")));
  }
  return TopicAssignment(std::move(ids), std::move(topics));
}

// Top topics by sentence count (noise excluded), ties by ascending topic id.
inline std::vector<std::pair<int, std::size_t>> top_topics(const TopicAssignment& a, std::size_t k = 15) {
  const auto sizes = a.topic_sizes();
  std::vector<std::pair<int, std::size_t>> ranked(sizes.begin(), sizes.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

// ---------------------------------------------------------------------------
// Spherical k-means with a cosine noise threshold.

enum class ClusterMethod { kmeans_noise };

struct ClusterParams {
  ClusterMethod method = ClusterMethod::kmeans_noise;
  std::size_t k_clusters = 8;
  double noise_threshold = 0.0;  // cosine similarity to the centroid
  std::uint64_t seed = 42;
  std::size_t max_iters = 100;

  void validate() const {
    if (k_clusters < 2) throw UsageError("k_clusters must be >= 2");
    if (!(noise_threshold >= -1.0 && noise_threshold <= 1.0)) throw UsageError("noise threshold must lie in [-1, 1]");
    if (max_iters < 1) throw UsageError("max_iters must be >= 1");
  }
};

struct ClusterResult {
  TopicAssignment assignment;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

namespace detail {

// Portable uniform draws; std::uniform_*_distribution differ across
// standard libraries.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

inline double dot(const float* a, const float* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

inline double dot(const float* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

// Runs fn(begin, end) over [0, n) on up to hardware_concurrency threads.
// Chunks are independent so the result does not depend on thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = n < 4096 ? 1 : std::min<std::size_t>(hw, n / 2048);
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

class SphericalKMeans {
 public:
  SphericalKMeans(std::vector<float> rows, std::size_t n, std::size_t d, const ClusterParams& params)
      : x_(std::move(rows)), n_(n), d_(d), params_(params), centroids_(params.k_clusters * d, 0.0),
        labels_(n, 0), similarity_(n, 0.0) {}

  void seed_centroids() {
    std::mt19937_64 rng(params_.seed);
    const std::size_t k = params_.k_clusters;
    std::vector<double> nearest(n_, 2.0);
    std::vector<bool> chosen(n_, false);
    std::size_t pick = uniform_index(rng, n_);
    for (std::size_t c = 0; c < k; ++c) {
      if (c > 0) {
        double total = 0.0;
        for (std::size_t i = 0; i < n_; ++i) total += nearest[i] * nearest[i];
        if (total <= 0.0) {
          pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
        } else {
          const double target = uniform01(rng) * total;
          double acc = 0.0;
          pick = n_ - 1;
          for (std::size_t i = 0; i < n_; ++i) {
            acc += nearest[i] * nearest[i];
            if (acc > target) {
              pick = i;
              break;
            }
          }
        }
      }
      chosen[pick] = true;
      const float* p = &x_[pick * d_];
      for (std::size_t j = 0; j < d_; ++j) centroids_[c * d_ + j] = p[j];
      for (std::size_t i = 0; i < n_; ++i) {
        const double dist = std::max(0.0, 1.0 - dot(&x_[i * d_], p, d_));
        nearest[i] = std::min(nearest[i], dist);
      }
    }
  }

  // Returns the number of rows whose label changed.
  std::size_t assign() {
    const std::size_t k = params_.k_clusters;
    std::vector<std::size_t> changed_per_row(n_, 0);
    parallel_for(n_, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const float* row = &x_[i * d_];
        std::size_t best = 0;
        double best_sim = dot(row, &centroids_[0], d_);
        for (std::size_t c = 1; c < k; ++c) {
          const double sim = dot(row, &centroids_[c * d_], d_);
          if (sim > best_sim) {
            best_sim = sim;
            best = c;
          }
        }
        changed_per_row[i] = labels_[i] != best ? 1 : 0;
        labels_[i] = best;
        similarity_[i] = best_sim;
      }
    });
    return std::accumulate(changed_per_row.begin(), changed_per_row.end(), std::size_t{0});
  }

  // Centroid = normalized mean direction; an empty cluster keeps its centroid.
  void update() {
    const std::size_t k = params_.k_clusters;
    std::vector<double> sums(k * d_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double* s = &sums[labels_[i] * d_];
      const float* row = &x_[i * d_];
      for (std::size_t j = 0; j < d_; ++j) s[j] += row[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      double sq = 0.0;
      for (std::size_t j = 0; j < d_; ++j) sq += sums[c * d_ + j] * sums[c * d_ + j];
      if (sq <= 0.0) continue;
      const double inv = 1.0 / std::sqrt(sq);
      for (std::size_t j = 0; j < d_; ++j) centroids_[c * d_ + j] = sums[c * d_ + j] * inv;
    }
  }

  void refresh_similarity() {
    parallel_for(n_, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        similarity_[i] = dot(&x_[i * d_], &centroids_[labels_[i] * d_], d_);
      }
    });
  }

  const std::vector<std::size_t>& labels() const { return labels_; }
  const std::vector<double>& similarity() const { return similarity_; }

 private:
  std::vector<float> x_;
  std::size_t n_;
  std::size_t d_;
  ClusterParams params_;
  std::vector<double> centroids_;
  std::vector<std::size_t> labels_;
  std::vector<double> similarity_;
};

}  // namespace detail

// Rows are processed in a content-defined order (lexicographic by vector,
// then sentence id), so permuting the input permutes the output identically.
inline ClusterResult cluster_embeddings(const EmbeddingMatrix& input, const ClusterParams& params) {
  params.validate();
  const std::size_t n = input.rows();
  const std::size_t d = input.dim();
  if (n == 0) throw DataError("cluster_embeddings: matrix has no rows");
  if (params.k_clusters > n) {
    throw DataError("cluster_embeddings: k_clusters (" + std::to_string(params.k_clusters) + ") exceeds row count (" +
                    std::to_string(n) + ")");
  }
  const EmbeddingMatrix m = normalize_rows(input);

  ClusterResult result;
  const auto values = m.values();
  const bool all_same = [&] {
    for (std::size_t i = 1; i < n; ++i) {
      if (!std::equal(values.begin() + static_cast<std::ptrdiff_t>(i * d),
                      values.begin() + static_cast<std::ptrdiff_t>((i + 1) * d), values.begin())) {
        return false;
      }
    }
    return true;
  }();
  if (all_same) {
    result.assignment = TopicAssignment(m.ids(), std::vector<int>(n, 0));
    result.converged = true;
    result.warnings.push_back("all embedding rows are identical; returning a single topic");
    return result;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = m.row(a);
    const auto rb = m.row(b);
    if (std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end())) return true;
    if (std::lexicographical_compare(rb.begin(), rb.end(), ra.begin(), ra.end())) return false;
    return m.ids()[a] < m.ids()[b];
  });
  std::vector<float> rows(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = m.row(order[i]);
    std::copy(r.begin(), r.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * d));
  }

  detail::SphericalKMeans km(std::move(rows), n, d, params);
  km.seed_centroids();
  km.assign();
  for (std::size_t it = 0; it < params.max_iters; ++it) {
    km.update();
    result.iterations = it + 1;
    if (km.assign() == 0) {
      result.converged = true;
      break;
    }
  }
  km.update();
  km.refresh_similarity();

  std::vector<int> topics(n, kNoiseTopic);
  for (std::size_t i = 0; i < n; ++i) {
    if (km.similarity()[i] >= params.noise_threshold) topics[order[i]] = static_cast<int>(km.labels()[i]);
  }
  result.assignment = canonicalize(TopicAssignment(m.ids(), std::move(topics)));
  if (!result.converged) {
    result.warnings.push_back("k-means did not converge within " + std::to_string(params.max_iters) + " iterations");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Class-based TF-IDF.

struct ScoredTerm {
  std::string term;
  double score = 0.0;
};

struct TopicKeywords {
  int topic_id = 0;
  std::vector<ScoredTerm> terms;  // score non-increasing
};

// Unigram and bigram counts per non-noise topic.
using ClassTermCounts = std::map<int, TermCounts>;

inline ClassTermCounts class_term_counts(std::span<const Sentence> sentences, const TopicAssignment& assignment,
                                         const TokenizerConfig& tok = {}) {
  check_coverage(assignment, sentences);
  ClassTermCounts classes;
  for (const auto& s : sentences) {
    const int topic = *assignment.topic_of(s.sentence_id);
    if (topic == kNoiseTopic) continue;
    auto& counts = classes[topic];
    const auto tokens = tokenize(s.text, tok);
    detail::add_ngrams(tokens, 1, counts);
    detail::add_ngrams(tokens, 2, counts);
  }
  return classes;
}

// score(t, c) = tf(t, c) * log(1 + A / f(t)); f(t) is t's count over all
// classes and A the mean number of term occurrences per class.
inline std::map<int, std::map<std::string, double>> ctfidf_scores(const ClassTermCounts& classes) {
  std::map<std::string, std::uint64_t> term_totals;
  std::uint64_t grand_total = 0;
  for (const auto& [topic, counts] : classes) {
    for (const auto& [term, count] : counts) {
      term_totals[term] += count;
      grand_total += count;
    }
  }
  std::map<int, std::map<std::string, double>> scores;
  if (classes.empty()) return scores;
  const double avg = static_cast<double>(grand_total) / static_cast<double>(classes.size());
  for (const auto& [topic, counts] : classes) {
    auto& out = scores[topic];
    for (const auto& [term, count] : counts) {
      out[term] = static_cast<double>(count) * std::log(1.0 + avg / static_cast<double>(term_totals.at(term)));
    }
  }
  return scores;
}

struct KeywordResult {
  std::vector<TopicKeywords> topics;  // ascending topic id
  std::vector<std::string> warnings;
};

inline KeywordResult ctfidf_keywords(std::span<const Sentence> sentences, const TopicAssignment& assignment,
                                     const TokenizerConfig& tok = {}, std::size_t k = 10) {
  const ClassTermCounts classes = class_term_counts(sentences, assignment, tok);
  const auto scores = ctfidf_scores(classes);
  KeywordResult result;
  for (const auto& [topic, term_scores] : scores) {
    TopicKeywords kw;
    kw.topic_id = topic;
    for (const auto& [term, score] : term_scores) kw.terms.push_back({term, score});
    std::sort(kw.terms.begin(), kw.terms.end(), [](const ScoredTerm& a, const ScoredTerm& b) {
      return a.score != b.score ? a.score > b.score : a.term < b.term;
    });
    if (kw.terms.size() > k) kw.terms.resize(k);
    if (kw.terms.empty()) {
      result.warnings.push_back("topic " + std::to_string(topic) + " has no terms after tokenization");
    }
    result.topics.push_back(std::move(kw));
  }
  return result;
}

inline KeywordResult ctfidf_keywords(const Corpus& corpus, const TopicAssignment& assignment,
                                     const TokenizerConfig& tok = {}, std::size_t k = 10) {
  return ctfidf_keywords(corpus.sentences, assignment, tok, k);
}

inline void write_keywords_csv(std::ostream& os, std::span<const TopicKeywords> topics) {
  detail::write_csv_row(os, {"topic_id", "rank", "term", "score"});
  for (const auto& kw : topics) {
    for (std::size_t r = 0; r < kw.terms.size(); ++r) {
      detail::write_csv_row(os, {std::to_string(kw.topic_id), std::to_string(r + 1), kw.terms[r].term,
                                 detail::format_exact(kw.terms[r].score)});
    }
  }
}

inline std::vector<TopicKeywords> read_keywords_csv(const std::filesystem::path& path) {
  std::map<int, std::vector<std::pair<std::int64_t, ScoredTerm>>> grouped;
  for (auto& row : detail::read_csv_file(path, {"topic_id", "rank", "term", "score"})) {
    const int topic = static_cast<int>(detail::parse_int(row[0], "topic_id"));
    grouped[topic].push_back({detail::parse_int(row[1], "rank"), {row[2], detail::parse_double(row[3], "score")}});
  }
  std::vector<TopicKeywords> out;
  for (auto& [topic, entries] : grouped) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    TopicKeywords kw;
    kw.topic_id = topic;
    for (auto& e : entries) kw.terms.push_back(std::move(e.second));
    out.push_back(std::move(kw));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 2-D projection for plot data.

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

enum class ProjectionMethod { pca, ingest_file };

// First two principal components. Each component's sign is chosen so its
// first non-negligible loading is positive.
inline std::vector<Point2> pca_2d(const EmbeddingMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t d = m.dim();
  if (d < 2) throw DataError("pca projection needs dimension >= 2");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  if (n == 0) return {};
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DataError("pca: eigen decomposition failed");
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(d), 2);
  basis.col(0) = solver.eigenvectors().col(static_cast<Eigen::Index>(d) - 1);
  basis.col(1) = solver.eigenvectors().col(static_cast<Eigen::Index>(d) - 2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    for (Eigen::Index j = 0; j < basis.rows(); ++j) {
      if (std::abs(basis(j, c)) > 1e-12) {
        if (basis(j, c) < 0) basis.col(c) *= -1.0;
        break;
      }
    }
  }
  const Eigen::MatrixXd projected = x * basis;
  std::vector<Point2> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = {projected(static_cast<Eigen::Index>(i), 0), projected(static_cast<Eigen::Index>(i), 1)};
  }
  return out;
}

// Reads `sentence_id,x,y` and aligns the rows to ids.
inline std::vector<Point2> load_coordinates(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::map<std::string, Point2> by_id;
  for (const auto& row : detail::read_csv_file(path, {"sentence_id", "x", "y"})) {
    if (!by_id.emplace(row[0], Point2{detail::parse_double(row[1], "x"), detail::parse_double(row[2], "y")}).second) {
      throw DataError(path.string() + ": duplicate coordinates for sentence '" + row[0] + "'");
    }
  }
  if (by_id.size() != ids.size()) {
    throw DataError("coordinate count mismatch: file has " + std::to_string(by_id.size()) + ", expected " +
                    std::to_string(ids.size()));
  }
  std::vector<Point2> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError(path.string() + ": no coordinates for sentence '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

inline std::vector<Point2> project_2d(const EmbeddingMatrix& m, ProjectionMethod method,
                                      const std::filesystem::path& coordinates_file = {}) {
  if (method == ProjectionMethod::pca) return pca_2d(m);
  return load_coordinates(coordinates_file, m.ids());
}

inline void write_plot_csv(std::ostream& os, const std::vector<std::string>& ids, std::span<const Point2> points,
                           const TopicAssignment& assignment) {
  if (ids.size() != points.size()) throw UsageError("write_plot_csv: id and point counts differ");
  detail::write_csv_row(os, {"sentence_id", "x", "y", "topic_id"});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto topic = assignment.topic_of(ids[i]);
    if (!topic) throw DataError("plot data: sentence '" + ids[i] + "' has no topic");
    detail::write_csv_row(os, {ids[i], detail::format_exact(points[i].x), detail::format_exact(points[i].y),
                               std::to_string(*topic)});
  }
}

}  // namespace corpuslens
