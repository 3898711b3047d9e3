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

// Command-line surface: configuration, pipeline orchestration and file
// emission for the corpuslens tool.

#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpuslens/corpuslens.hpp"

namespace corpuslens::cli {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

inline constexpr const char* kOutputDirEnv = "CORPUSLENS_OUT";

struct CorpusSpec {
  std::string label;
  std::filesystem::path path;
  std::optional<CorpusFormat> format;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> assignments;
  std::optional<std::filesystem::path> coordinates;
  std::optional<std::filesystem::path> topic_labels;
};

struct PipelineConfig {
  std::vector<CorpusSpec> corpora;

  TokenizerConfig tokenizer;
  std::string stopwords_source = "default";  // "default", "none", "inline" or a file path
  SegmentationConfig segmentation;

  ClusterParams cluster;
  ProjectionMethod projection = ProjectionMethod::pca;

  MetricOptions metrics;
  std::size_t keywords_k = 10;
  ErrorSizeBand band;

  int ngram = 1;
  std::size_t top_k = 20;
  SortBy sort_by = SortBy::b_count;

  std::optional<std::filesystem::path> grouping;
  std::optional<std::filesystem::path> runs;
  std::optional<std::string> candidate;
  std::optional<std::filesystem::path> candidate_file;

  std::filesystem::path output_dir = "out";
};

// Reads a YAML pipeline config. Unknown keys are errors.
PipelineConfig load_config(const std::filesystem::path& path);

// Applies YAML text on top of `base`. Relative paths resolve against base_dir.
PipelineConfig parse_config(const std::string& yaml_text, PipelineConfig base = {},
                            const std::filesystem::path& base_dir = {});

ThematicGroupingConfig load_grouping_config(const std::filesystem::path& path);

nlohmann::ordered_json config_to_json(const PipelineConfig& config);

// Runs one subcommand. args excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace corpuslens::cli
