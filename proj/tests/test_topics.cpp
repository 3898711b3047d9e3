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


#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "corpuslens/topics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace corpuslens;

namespace {

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%05zu", i);
    out.emplace_back(buf);
  }
  return out;
}

TokenizerConfig bare() {
  TokenizerConfig cfg;
  cfg.stopwords.clear();
  cfg.min_token_chars = 1;
  return cfg;
}

std::vector<Sentence> sentences(const std::vector<std::string>& texts) {
  std::vector<Sentence> out;
  const auto names = ids(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.push_back({names[i], "d", i, texts[i], detail::whitespace_token_count(texts[i])});
  }
  return out;
}

std::multiset<std::size_t> size_multiset(const TopicAssignment& a) {
  std::multiset<std::size_t> out;
  for (const auto& [t, s] : a.topic_sizes()) out.insert(s);
  return out;
}

double score_of(const TopicKeywords& kw, const std::string& term) {
  for (const auto& t : kw.terms) {
    if (t.term == term) return t.score;
  }
  return -1.0;
}

}  // namespace

TEST(TopicAssignment, Validation) {
  EXPECT_THROW(TopicAssignment({"a"}, {-2}), DataError);
  EXPECT_THROW(TopicAssignment({"a", "a"}, {0, 1}), DataError);
  EXPECT_THROW(TopicAssignment({"a"}, {0, 1}), DataError);
  const TopicAssignment a({"a", "b", "c"}, {0, -1, 0});
  EXPECT_EQ(a.noise_count(), 1u);
  EXPECT_EQ(a.topic_sizes(), (std::map<int, std::size_t>{{0, 2}}));
  EXPECT_EQ(*a.topic_of("b"), -1);
  EXPECT_FALSE(a.topic_of("z"));
}

TEST(TopicAssignment, CanonicalizeBySizeThenSmallestMember) {
  const TopicAssignment a({"a", "b", "c", "d", "e", "f"}, {7, 3, 3, 9, -1, 7});
  // 3 = {b, c}, 7 = {a, f}, 9 = {d}; the tie between 3 and 7 goes to 7 (holds "a").
  const auto c = canonicalize(a);
  EXPECT_EQ(c.topics(), (std::vector<int>{0, 1, 1, 2, -1, 0}));
  EXPECT_EQ(canonicalize(c), c);
}

TEST(TopicAssignment, CoverageChecked) {
  const auto s = sentences({"a b", "c d"});
  EXPECT_NO_THROW(check_coverage(TopicAssignment({s[0].sentence_id, s[1].sentence_id}, {0, 1}), s));
  EXPECT_THROW(check_coverage(TopicAssignment({s[0].sentence_id}, {0}), s), DataError);
  EXPECT_THROW(check_coverage(TopicAssignment({s[0].sentence_id, "zz"}, {0, 1}), s), DataError);
}

TEST(AssignmentCsv, RoundTrip) {
  TempDir dir;
  const TopicAssignment a({"x,1", "y"}, {-1, 3});
  std::ostringstream os;
  write_assignment_csv(os, a);
  EXPECT_EQ(os.str(), "sentence_id,topic_id\n\"x,1\",-1\ny,3\n");
  write_text(dir / "a.csv", os.str());
  EXPECT_EQ(read_assignment_csv(dir / "a.csv"), a);
  write_text(dir / "bad.csv", "sentence_id,topic\nx,1\n");
  EXPECT_THROW(read_assignment_csv(dir / "bad.csv"), DataError);
}

TEST(TopTopics, TieBreakAndNoise) {
  std::vector<std::string> names;
  std::vector<int> topics;
  auto add = [&](int t, int n) {
    for (int i = 0; i < n; ++i) {
      names.push_back("s" + std::to_string(names.size()));
      topics.push_back(t);
    }
  };
  add(0, 50);
  add(2, 30);
  add(1, 30);
  add(-1, 10);
  const TopicAssignment a(names, topics);
  EXPECT_EQ(top_topics(a, 2), (std::vector<std::pair<int, std::size_t>>{{0, 50}, {1, 30}}));
  EXPECT_TRUE(top_topics(TopicAssignment({"a", "b"}, {-1, -1})).empty());
}

TEST(TopTopics, MatchesSortOracle) {
  std::mt19937_64 rng(8);
  const auto names = ids(10000);
  std::vector<int> topics(10000);
  for (auto& t : topics) t = static_cast<int>(oracle::below(rng, 40)) - 1;
  const TopicAssignment a(names, topics);
  auto expected = oracle::ranked_topics(topics);
  const auto all = top_topics(a, 1000);
  EXPECT_EQ(all, expected);
  std::size_t total = a.noise_count();
  for (const auto& [t, s] : all) total += s;
  EXPECT_EQ(total, a.size());
  expected.resize(15);
  EXPECT_EQ(top_topics(a), expected);
}

TEST(Cluster, OrthogonalSingletons) {
  const EmbeddingMatrix m(ids(3), 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  ClusterParams p;
  p.k_clusters = 3;
  p.noise_threshold = 0.5;
  const auto r = cluster_embeddings(m, p);
  EXPECT_EQ(r.assignment.noise_count(), 0u);
  EXPECT_EQ(size_multiset(r.assignment), (std::multiset<std::size_t>{1, 1, 1}));
}

TEST(Cluster, OutlierBecomesNoise) {
  // Two antipodal bundles of 10 points along +/-x (tiny y/z jitter), and one
  // point along z.
  std::vector<float> v;
  std::mt19937_64 rng(3);
  auto push = [&](double x, double y, double z) {
    const double n = std::sqrt(x * x + y * y + z * z);
    v.insert(v.end(), {static_cast<float>(x / n), static_cast<float>(y / n), static_cast<float>(z / n)});
  };
  for (int i = 0; i < 10; ++i) push(1.0, 0.05 * (oracle::unit(rng) - 0.5), 0.05 * (oracle::unit(rng) - 0.5));
  for (int i = 0; i < 10; ++i) push(-1.0, 0.05 * (oracle::unit(rng) - 0.5), 0.05 * (oracle::unit(rng) - 0.5));
  push(0.0, 0.0, 1.0);
  const EmbeddingMatrix m(ids(21), 3, v);
  ClusterParams p;
  p.k_clusters = 2;
  p.noise_threshold = 0.9;
  const auto r = cluster_embeddings(m, p);
  const auto& t = r.assignment.topics();
  EXPECT_EQ(t[20], kNoiseTopic);
  EXPECT_EQ(r.assignment.noise_count(), 1u);
  for (int i = 1; i < 10; ++i) EXPECT_EQ(t[i], t[0]);
  for (int i = 11; i < 20; ++i) EXPECT_EQ(t[i], t[10]);
  EXPECT_NE(t[0], t[10]);
  // Direct check of the noise rule: the outlier's cosine to each bundle mean is ~0.
  double best = -1.0;
  for (int b : {0, 10}) {
    double mean[3] = {0, 0, 0};
    for (int i = b; i < b + 10; ++i) {
      for (int j = 0; j < 3; ++j) mean[j] += v[i * 3 + j];
    }
    const double n = std::sqrt(mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]);
    best = std::max(best, mean[2] / n);
  }
  EXPECT_LT(best, 0.9);
}

TEST(Cluster, DeterministicAndPermutationEquivariant) {
  const auto v = oracle::blob_embeddings(2000, 16, 6, 0.4, 12);
  const auto names = ids(2000);
  const EmbeddingMatrix m(names, 16, v);
  ClusterParams p;
  p.k_clusters = 6;
  p.noise_threshold = 0.6;
  p.seed = 77;
  const auto a = cluster_embeddings(m, p);
  EXPECT_EQ(cluster_embeddings(m, p).assignment, a.assignment);

  std::vector<std::size_t> perm(2000);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(5);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> pnames;
  std::vector<float> pv;
  for (std::size_t i : perm) {
    pnames.push_back(names[i]);
    pv.insert(pv.end(), v.begin() + static_cast<long>(i * 16), v.begin() + static_cast<long>((i + 1) * 16));
  }
  const auto b = cluster_embeddings(EmbeddingMatrix(pnames, 16, pv), p);
  EXPECT_EQ(size_multiset(a.assignment), size_multiset(b.assignment));
  for (std::size_t i = 0; i < 2000; ++i) EXPECT_EQ(*b.assignment.topic_of(pnames[i]), *a.assignment.topic_of(pnames[i]));
}

TEST(Cluster, RecoversWellSeparatedBlobs) {
  std::vector<int> truth;
  const auto v = oracle::blob_embeddings(600, 8, 3, 0.05, 21, &truth);
  ClusterParams p;
  p.k_clusters = 3;
  p.noise_threshold = -1.0;
  const auto r = cluster_embeddings(EmbeddingMatrix(ids(600), 8, v), p);
  EXPECT_TRUE(r.converged);
  // Same partition up to renaming.
  std::map<int, int> mapping;
  for (std::size_t i = 0; i < 600; ++i) {
    auto [it, inserted] = mapping.emplace(truth[i], r.assignment.topics()[i]);
    EXPECT_EQ(it->second, r.assignment.topics()[i]);
  }
}

TEST(Cluster, Errors) {
  const EmbeddingMatrix m(ids(2), 2, {1, 0, 0, 1});
  ClusterParams p;
  p.k_clusters = 3;
  EXPECT_THROW(cluster_embeddings(m, p), DataError);
  p.k_clusters = 1;
  EXPECT_THROW(cluster_embeddings(m, p), UsageError);
  p.k_clusters = 2;
  p.noise_threshold = 1.5;
  EXPECT_THROW(cluster_embeddings(m, p), UsageError);
}

TEST(Cluster, IdenticalRowsGiveOneTopicWithWarning) {
  const EmbeddingMatrix m(ids(4), 2, {0.6f, 0.8f, 0.6f, 0.8f, 0.6f, 0.8f, 0.6f, 0.8f});
  ClusterParams p;
  p.k_clusters = 2;
  const auto r = cluster_embeddings(m, p);
  EXPECT_EQ(r.assignment.topics(), (std::vector<int>{0, 0, 0, 0}));
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Cluster, UnnormalizedInputIsNormalizedFirst) {
  const auto v = oracle::blob_embeddings(300, 4, 3, 0.1, 2);
  std::vector<float> scaled = v;
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= static_cast<float>(1 + (i / 4) % 7);
  ClusterParams p;
  p.k_clusters = 3;
  const auto a = cluster_embeddings(EmbeddingMatrix(ids(300), 4, v), p);
  const auto b = cluster_embeddings(EmbeddingMatrix(ids(300), 4, scaled), p);
  EXPECT_EQ(size_multiset(a.assignment), size_multiset(b.assignment));
}

TEST(Ctfidf, TwoClassHandExample) {
  // class 0 = "apple apple banana", class 1 = "banana cherry". Terms are
  // unigrams and bigrams, so class 0 holds 5 occurrences and class 1 holds 3:
  // A = (5 + 3) / 2 = 4.
  const auto s = sentences({"apple apple banana", "banana cherry"});
  const TopicAssignment a({s[0].sentence_id, s[1].sentence_id}, {0, 1});
  const auto kw = ctfidf_keywords(s, a, bare(), 10).topics;
  ASSERT_EQ(kw.size(), 2u);
  const double A = 4.0;
  EXPECT_NEAR(score_of(kw[0], "apple"), 2.0 * std::log(1.0 + A / 2.0), 1e-12);
  EXPECT_NEAR(score_of(kw[0], "banana"), 1.0 * std::log(1.0 + A / 2.0), 1e-12);
  EXPECT_NEAR(score_of(kw[0], "apple apple"), std::log(1.0 + A), 1e-12);
  EXPECT_EQ(kw[0].terms[0].term, "apple");
  EXPECT_GT(score_of(kw[0], "apple"), score_of(kw[0], "banana"));
}

TEST(Ctfidf, ExclusiveTermOutscoresSharedTerm) {
  const auto s = sentences({"alpha common", "beta common", "gamma common"});
  const TopicAssignment a({s[0].sentence_id, s[1].sentence_id, s[2].sentence_id}, {0, 1, 2});
  for (const auto& kw : ctfidf_keywords(s, a, bare(), 10).topics) {
    EXPECT_NE(kw.terms[0].term, "common");
    EXPECT_GT(kw.terms[0].score, score_of(kw, "common"));
  }
}

TEST(Ctfidf, MatchesDenseOracleAndDuplicationKeepsRanking) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t classes = 2 + oracle::below(rng, 4);
    std::vector<std::string> texts;
    std::vector<int> topics;
    std::vector<std::vector<std::vector<std::string>>> by_class(classes);
    for (int i = 0; i < 40; ++i) {
      const int c = static_cast<int>(oracle::below(rng, classes + 1)) - 1;  // includes noise
      std::vector<std::string> toks;
      std::string text;
      for (std::size_t j = 0, len = 1 + oracle::below(rng, 6); j < len; ++j) {
        toks.push_back("t" + std::to_string(oracle::below(rng, 12)));
        text += (j ? " " : "") + toks.back();
      }
      texts.push_back(text);
      topics.push_back(c);
      if (c >= 0) by_class[static_cast<std::size_t>(c)].push_back(toks);
    }
    const auto s = sentences(texts);
    std::vector<std::string> names;
    for (const auto& x : s) names.push_back(x.sentence_id);
    const TopicAssignment a(names, topics);
    const auto dense = oracle::ctfidf(by_class);
    const auto scores = ctfidf_scores(class_term_counts(s, a, bare()));
    for (const auto& [c, terms] : scores) {
      for (std::size_t v = 0; v < dense.vocab.size(); ++v) {
        const double expected = dense.score[static_cast<std::size_t>(c)][v];
        auto it = terms.find(dense.vocab[v]);
        EXPECT_NEAR(it == terms.end() ? 0.0 : it->second, expected, 1e-9);
      }
    }

    std::vector<std::string> doubled = texts;
    doubled.insert(doubled.end(), texts.begin(), texts.end());
    std::vector<int> doubled_topics = topics;
    doubled_topics.insert(doubled_topics.end(), topics.begin(), topics.end());
    const auto s2 = sentences(doubled);
    std::vector<std::string> names2;
    for (const auto& x : s2) names2.push_back(x.sentence_id);
    const auto k1 = ctfidf_keywords(s, a, bare(), 1000).topics;
    const auto k2 = ctfidf_keywords(s2, TopicAssignment(names2, doubled_topics), bare(), 1000).topics;
    ASSERT_EQ(k1.size(), k2.size());
    for (std::size_t c = 0; c < k1.size(); ++c) {
      ASSERT_EQ(k1[c].terms.size(), k2[c].terms.size());
      for (std::size_t r = 0; r < k1[c].terms.size(); ++r) EXPECT_EQ(k1[c].terms[r].term, k2[c].terms[r].term);
    }
  }
}

TEST(Ctfidf, KeywordsExcludeStopwordsAndHonorK) {
  const auto s = sentences({"the union and the branch", "of the council and members"});
  const TopicAssignment a({s[0].sentence_id, s[1].sentence_id}, {0, 1});
  const auto kw = ctfidf_keywords(s, a, TokenizerConfig{}, 2).topics;
  const auto sw = default_stopwords();
  for (const auto& t : kw) {
    EXPECT_LE(t.terms.size(), 2u);
    for (const auto& term : t.terms) {
      for (const auto w : detail::split_whitespace(term.term)) EXPECT_EQ(sw.count(std::string(w)), 0u);
    }
    for (std::size_t r = 1; r < t.terms.size(); ++r) EXPECT_GE(t.terms[r - 1].score, t.terms[r].score);
  }
}

TEST(Ctfidf, EmptyClassWarns) {
  const auto s = sentences({"the and of", "real words here"});
  const TopicAssignment a({s[0].sentence_id, s[1].sentence_id}, {0, 1});
  const auto r = ctfidf_keywords(s, a, TokenizerConfig{}, 10);
  ASSERT_EQ(r.topics.size(), 2u);
  EXPECT_TRUE(r.topics[0].terms.empty());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(KeywordsCsv, RoundTripsExactScores) {
  TempDir dir;
  const std::vector<TopicKeywords> kw = {{0, {{"a b", 1.0 / 3.0}, {"c", 0.1}}}, {1, {{"d", 2.5}}}};
  std::ostringstream os;
  write_keywords_csv(os, kw);
  write_text(dir / "k.csv", os.str());
  const auto back = read_keywords_csv(dir / "k.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].terms[0].term, "a b");
  EXPECT_EQ(back[0].terms[0].score, 1.0 / 3.0);
  EXPECT_EQ(back[1].terms[0].score, 2.5);
}

TEST(Projection, PlanarDataKeepsDistances) {
  // Points on a 2-D plane spanned by two orthonormal vectors in R^5.
  std::mt19937_64 rng(4);
  // Exactly representable basis and coefficients keep the float data planar.
  const double u[5] = {0.5, 0.5, 0.5, 0.5, 0};
  const double w[5] = {0.5, -0.5, 0.5, -0.5, 0};
  std::vector<float> v;
  for (int i = 0; i < 40; ++i) {
    const double a = std::round(oracle::normal(rng) * 192.0) / 64.0;
    const double b = std::round(oracle::normal(rng) * 64.0) / 64.0;
    for (int j = 0; j < 5; ++j) v.push_back(static_cast<float>(a * u[j] + b * w[j] + (j == 4 ? 0.5 : 0.0)));
  }
  const EmbeddingMatrix m(ids(40), 5, v);
  const auto p = pca_2d(m);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 40; ++j) {
      double orig = 0.0;
      for (int k = 0; k < 5; ++k) {
        const double dlt = static_cast<double>(m.row(i)[k]) - m.row(j)[k];
        orig += dlt * dlt;
      }
      const double dx = p[i].x - p[j].x, dy = p[i].y - p[j].y;
      EXPECT_NEAR(std::sqrt(dx * dx + dy * dy), std::sqrt(orig), 1e-6);
    }
  }
  EXPECT_EQ(pca_2d(m), p);
}

TEST(Projection, IdenticalRowsCollapse) {
  const auto p = pca_2d(EmbeddingMatrix(ids(3), 3, {1, 2, 3, 1, 2, 3, 1, 2, 3}));
  for (const auto& q : p) EXPECT_EQ(q, p[0]);
}

TEST(Projection, DimensionOneRejected) {
  EXPECT_THROW(pca_2d(EmbeddingMatrix(ids(2), 1, {1, 2})), DataError);
}

TEST(Projection, IngestedCoordinatesPassThrough) {
  TempDir dir;
  write_text(dir / "c.csv", "sentence_id,x,y\ns00001,0.1,-3e-7\ns00000,1.5,2.25\n");
  const EmbeddingMatrix m(ids(2), 2, {1, 0, 0, 1});
  const auto p = project_2d(m, ProjectionMethod::ingest_file, dir / "c.csv");
  EXPECT_EQ(p[0], (Point2{1.5, 2.25}));
  EXPECT_EQ(p[1], (Point2{0.1, -3e-7}));
  write_text(dir / "short.csv", "sentence_id,x,y\ns00000,1,2\n");
  EXPECT_THROW(project_2d(m, ProjectionMethod::ingest_file, dir / "short.csv"), DataError);
}

TEST(PlotCsv, Layout) {
  std::ostringstream os;
  const std::vector<Point2> p = {{0.5, -1.0}};
  write_plot_csv(os, {"a"}, p, TopicAssignment({"a"}, {-1}));
  EXPECT_EQ(os.str(), "sentence_id,x,y,topic_id\na,0.5,-1,-1\n");
}
