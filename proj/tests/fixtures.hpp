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


// Published reference figures used as arithmetic fixtures. The archives they
// were computed from are not distributed, so only the arithmetic performed on
// the figures is checked.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fixture {

struct TopTermRow {
  std::string word;
  std::uint64_t count_bs;
  double pct_bs;
  std::uint64_t count_uc;
  double pct_uc;
  std::string diff;  // as printed, 2 decimals
};

// The 20 most common shared terms of the two union archives, sorted by the
// community corpus ("uc") count.
inline const std::vector<TopTermRow>& top_terms() {
  static const std::vector<TopTermRow> rows = {
      {"branch", 3058, 99.96, 2631, 100.00, "0.04"},   {"member", 6584, 100.00, 2144, 99.99, "-0.01"},
      {"community", 155, 96.74, 2081, 99.98, "3.24"},  {"unite", 37, 91.05, 2023, 99.97, "8.92"},
      {"report", 3013, 99.96, 1893, 99.96, "0.00"},    {"meeting", 2078, 99.88, 1851, 99.95, "0.07"},
      {"campaign", 79, 94.60, 1558, 99.94, "5.34"},    {"leeds", 222, 97.62, 1329, 99.93, "2.31"},
      {"support", 630, 99.29, 1159, 99.93, "0.64"},    {"union", 6311, 99.99, 1090, 99.92, "-0.07"},
      {"work", 6032, 99.99, 995, 99.91, "-0.08"},      {"york", 77, 94.51, 810, 99.90, "5.39"},
      {"action", 574, 99.14, 769, 99.89, "0.75"},      {"group", 133, 96.37, 765, 99.88, "3.51"},
      {"council", 3300, 99.97, 733, 99.87, "-0.10"},   {"local", 878, 99.54, 704, 99.86, "0.32"},
      {"event", 158, 96.82, 664, 99.85, "3.03"},       {"national", 2021, 99.87, 658, 99.84, "-0.03"},
      {"people", 1398, 99.75, 620, 99.83, "0.08"},     {"labour", 4484, 99.98, 613, 99.82, "-0.16"},
  };
  return rows;
}

// Sweep of 41 model runs versus the selected model.
struct SweepRow {
  const char* metric;
  double candidate;
  double mean;
  double std;
  double min;
  double max;
};

inline const std::vector<SweepRow>& sweep() {
  static const std::vector<SweepRow> rows = {
      {"appearance_pct", 54.73, 53.44, 3.81, 48.56, 65.38},
      {"ngram_value", 0.19, 0.18, 0.01, 0.15, 0.20},
      {"gini", 0.38, 0.46, 0.10, 0.32, 0.76},
      {"topic20_size", 984, 793.05, 251.98, 117.0, 1421.0},
  };
  return rows;
}

}  // namespace fixture
