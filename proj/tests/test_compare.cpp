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

#include <sstream>

#include "corpuslens/compare.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace corpuslens;

namespace {

TopicKeywords kw(int id, std::vector<std::string> terms) {
  TopicKeywords out;
  out.topic_id = id;
  for (auto& t : terms) out.terms.push_back({std::move(t), 1.0});
  return out;
}

KeywordPool pool(const std::string& id, TermCounts counts) {
  KeywordPool p;
  p.model_id = id;
  for (const auto& [t, c] : counts) p.total_pool += c;
  p.counts = std::move(counts);
  return p;
}

TopicAssignment sized(const std::vector<std::size_t>& sizes, std::size_t noise = 0) {
  std::vector<std::string> names;
  std::vector<int> topics;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    for (std::size_t i = 0; i < sizes[t]; ++i) {
      names.push_back("s" + std::to_string(names.size()));
      topics.push_back(static_cast<int>(t));
    }
  }
  for (std::size_t i = 0; i < noise; ++i) {
    names.push_back("s" + std::to_string(names.size()));
    topics.push_back(-1);
  }
  return TopicAssignment(names, topics);
}

}  // namespace

TEST(KeywordPool, CountsUnigramAndBigramMass) {
  Corpus c;
  c.label = "m";
  c.sentences = {{"a#0", "a", 0, "union branch union", 3}, {"a#1", "a", 1, "branch meeting", 2}};
  const auto p = keyword_pool(c);
  EXPECT_EQ(p.model_id, "m");
  EXPECT_EQ(p.counts.at("union"), 2u);
  EXPECT_EQ(p.counts.at("union branch"), 1u);
  EXPECT_EQ(p.total_pool, 5u + 3u);
  std::uint64_t sum = 0;
  for (const auto& [t, n] : p.counts) sum += n;
  EXPECT_EQ(sum, p.total_pool);
}

TEST(KeywordOverlap, SharedMassShares) {
  const std::vector<TopicKeywords> a = {kw(0, {"union", "branch"}), kw(1, {"pay"})};
  const std::vector<TopicKeywords> b = {kw(0, {"community", "union"}), kw(1, {"pay", "campaign"})};
  const auto pa = pool("a", {{"union", 30}, {"branch", 10}, {"pay", 10}, {"other", 50}});
  const auto pb = pool("b", {{"union", 5}, {"community", 20}, {"pay", 15}, {"campaign", 60}});
  const auto r = keyword_overlap(a, b, pa, pb);
  EXPECT_EQ(r.shared_terms, (std::vector<std::string>{"pay", "union"}));
  EXPECT_EQ(r.shared_mass_a, 40u);
  EXPECT_EQ(r.shared_mass_b, 20u);
  EXPECT_DOUBLE_EQ(r.pct_a, 40.0);
  EXPECT_DOUBLE_EQ(r.pct_b, 20.0);
  const auto swapped = keyword_overlap(b, a, pb, pa);
  EXPECT_EQ(swapped.shared_terms.size(), r.shared_terms.size());
  EXPECT_DOUBLE_EQ(swapped.pct_a, r.pct_b);
}

TEST(KeywordOverlap, IdenticalAndDisjointModels) {
  const std::vector<TopicKeywords> a = {kw(0, {"x", "y"}), kw(1, {"z"})};
  const auto p = pool("a", {{"x", 1}, {"y", 2}, {"z", 3}, {"w", 4}});
  const auto same = keyword_overlap(a, a, p, p);
  EXPECT_EQ(same.shared_terms.size(), 3u);
  EXPECT_DOUBLE_EQ(same.pct_a, 60.0);
  EXPECT_DOUBLE_EQ(same.pct_b, 60.0);
  const std::vector<TopicKeywords> b = {kw(0, {"w"})};
  const auto none = keyword_overlap(a, b, p, p);
  EXPECT_TRUE(none.shared_terms.empty());
  EXPECT_EQ(none.pct_a, 0.0);
  EXPECT_EQ(none.pct_b, 0.0);
}

TEST(KeywordOverlap, PercentagesBoundedOnRandomModels) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    TermCounts ca, cb;
    std::vector<std::string> ka, kb;
    for (int i = 0; i < 30; ++i) {
      const std::string t = "t" + std::to_string(oracle::below(rng, 40));
      ca[t] += 1 + oracle::below(rng, 5);
      if (i % 3 == 0) ka.push_back(t);
      const std::string u = "t" + std::to_string(oracle::below(rng, 40));
      cb[u] += 1 + oracle::below(rng, 5);
      if (i % 3 == 0) kb.push_back(u);
    }
    const std::vector<TopicKeywords> a = {kw(0, ka)}, b = {kw(0, kb)};
    const auto r = keyword_overlap(a, b, pool("a", ca), pool("b", cb));
    EXPECT_LE(r.pct_a, 100.0);
    EXPECT_LE(r.pct_b, 100.0);
    EXPECT_EQ(keyword_overlap(b, a, pool("b", cb), pool("a", ca)).shared_terms, r.shared_terms);
  }
}

TEST(KeywordOverlap, EmptyKeywordListsRejected) {
  const auto p = pool("a", {{"x", 1}});
  EXPECT_THROW(keyword_overlap(std::vector<TopicKeywords>{}, std::vector<TopicKeywords>{kw(0, {"x"})}, p, p), DataError);
}

TEST(OverlapCsv, Layout) {
  OverlapReport r;
  r.shared_terms = {"a", "b"};
  r.shared_mass_a = 4;
  r.pool_a = 100;
  r.pct_a = 4.0;
  r.shared_mass_b = 1;
  r.pool_b = 3;
  r.pct_b = 100.0 / 3.0;
  std::ostringstream os;
  write_overlap_csv(os, r, "uc", "bs");
  EXPECT_EQ(os.str(), "model,shared_keywords,shared_mass,total_pool,pct_of_pool\nuc,2,4,100,4.00\nbs,2,1,3,33.33\n");
}

TEST(Grouping, HandSummedGroup) {
  const auto a = sized({40, 25, 10, 5}, 3);
  const std::map<int, std::string> labels = {{0, "Labour Party"}, {1, "Pay"}, {2, "CLP Relations"}};
  ThematicGroupingConfig cfg;
  cfg.groups.push_back({"Politics", {"Labour Party", "CLP Relations"}, "party links"});
  const auto t = apply_thematic_grouping(labels, cfg, a);
  ASSERT_EQ(t.groups.size(), 1u);
  EXPECT_EQ(t.groups[0].topics, (std::vector<int>{0, 2}));
  EXPECT_EQ(t.groups[0].sentence_count, 40u + 10u);
  EXPECT_EQ(t.groups[0].note, "party links");
  // "Pay" is labelled but unclaimed; topic 3 has no label at all.
  EXPECT_EQ(t.ungrouped.topics, (std::vector<int>{1, 3}));
  EXPECT_EQ(t.ungrouped.sentence_count, 30u);
  EXPECT_EQ(t.groups[0].sentence_count + t.ungrouped.sentence_count, 80u);
}

TEST(Grouping, EmptyConfigLeavesEverythingUngrouped) {
  const auto a = sized({4, 3, 2});
  const auto t = apply_thematic_grouping({{0, "x"}}, ThematicGroupingConfig{}, a);
  EXPECT_TRUE(t.groups.empty());
  EXPECT_EQ(t.ungrouped.sentence_count, 9u);
}

TEST(Grouping, DuplicateLabelNamed) {
  ThematicGroupingConfig cfg;
  cfg.groups.push_back({"A", {"Pay"}, ""});
  cfg.groups.push_back({"B", {"Pay"}, ""});
  try {
    cfg.validate();
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'Pay'"), std::string::npos);
  }
}

TEST(Grouping, ConservesSentencesOnRandomInputs) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> sizes(1 + oracle::below(rng, 12));
    for (auto& s : sizes) s = 1 + oracle::below(rng, 30);
    const auto a = sized(sizes, oracle::below(rng, 5));
    std::map<int, std::string> labels;
    ThematicGroupingConfig cfg;
    cfg.groups = {{"g0", {}, ""}, {"g1", {}, ""}};
    for (std::size_t t = 0; t < sizes.size(); ++t) {
      if (oracle::below(rng, 4) == 0) continue;
      labels[static_cast<int>(t)] = "L" + std::to_string(t);
      const std::size_t g = oracle::below(rng, 3);
      if (g < 2) cfg.groups[g].topic_labels.push_back("L" + std::to_string(t));
    }
    const auto table = apply_thematic_grouping(labels, cfg, a);
    std::size_t total = table.ungrouped.sentence_count;
    for (const auto& g : table.groups) total += g.sentence_count;
    EXPECT_EQ(total, a.size() - a.noise_count());
  }
}

TEST(GroupingCsv, Layout) {
  const auto a = sized({3, 2});
  ThematicGroupingConfig cfg;
  cfg.groups.push_back({"Work", {"Pay"}, "wages, hours"});
  std::ostringstream os;
  write_grouping_csv(os, apply_thematic_grouping({{0, "Pay"}}, cfg, a));
  EXPECT_EQ(os.str(), "group,topics,labels,sentence_count,note\nWork,0,Pay,3,\"wages, hours\"\nungrouped,1,,2,\n");
}

TEST(TopicLabelsCsv, RejectsDoubleLabel) {
  TempDir dir;
  write_text(dir / "l.csv", "topic_id,label\n0,Pay\n0,Hours\n");
  EXPECT_THROW(read_topic_labels_csv(dir / "l.csv"), DataError);
  write_text(dir / "ok.csv", "topic_id,label\n1,\"Pay, hours\"\n");
  EXPECT_EQ(read_topic_labels_csv(dir / "ok.csv").at(1), "Pay, hours");
}

TEST(Report, AllFourSectionsAndGaps) {
  ReportInputs in;
  in.a.label = "x";
  in.b.label = "y";
  in.a.stats = CorpusStats{10, 7.5, 3, 12, 2, 0};
  in.b.stats = CorpusStats{5, 6.0, 3, 9, 1, 0};
  in.frequency = ComparisonResult{{{"w", 3, 100.0, 2, 50.0, -50.0}}, 1, {}};
  in.a.metrics = ModelMetrics{0.1, 80.0, 0, 1.0, 0.5};
  in.b.metrics_gap = "no embeddings or topic assignments supplied";
  in.overlap_gap = "keyword lists require topic assignments for both corpora";
  const std::string md = side_by_side_report(in);
  for (const char* section : {"## Frequency comparison", "## Corpus statistics", "## Topic model metrics",
                              "## Keyword overlap"}) {
    EXPECT_NE(md.find(section), std::string::npos) << section;
  }
  EXPECT_NE(md.find("| y | unavailable"), std::string::npos) << md;
  EXPECT_NE(md.find("_unavailable: keyword lists require"), std::string::npos) << md;
  EXPECT_NE(md.find("| w | 3 | 100.00 | 2 | 50.00 | -50.00 |"), std::string::npos) << md;
}
