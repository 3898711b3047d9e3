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

#include "cli.hpp"

#include <openssl/evp.h>
#include <unicode/uvernum.h>
#include <yaml-cpp/yaml.h>

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

namespace corpuslens::cli {

namespace {

// ---------------------------------------------------------------------------
// Config parsing.

void check_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed, const std::string& prefix) {
  if (!node.IsMap()) throw UsageError("config: '" + prefix + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw UsageError("config: unknown key '" + (prefix.empty() ? key : prefix + "." + key) + "'");
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw UsageError("config: invalid value for '" + key + "' (line " + std::to_string(node.Mark().line + 1) + ")");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base_dir.empty()) return base_dir / path;
  return path;
}

CorpusFormat parse_format(const std::string& s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "plain_dir") return CorpusFormat::plain_dir;
  throw UsageError("unknown corpus format '" + s + "' (expected jsonl or plain_dir)");
}

std::string format_name(CorpusFormat f) { return f == CorpusFormat::jsonl ? "jsonl" : "plain_dir"; }

ProjectionMethod parse_projection(const std::string& s) {
  if (s == "pca") return ProjectionMethod::pca;
  if (s == "file") return ProjectionMethod::ingest_file;
  throw UsageError("unknown projection '" + s + "' (expected pca or file)");
}

RankMode parse_rank_mode(const std::string& s) {
  if (s == "single_rank") return RankMode::single_rank;
  if (s == "cumulative") return RankMode::cumulative;
  throw UsageError("unknown rank mode '" + s + "' (expected single_rank or cumulative)");
}

BandMode parse_band_mode(const std::string& s) {
  if (s == "relative") return BandMode::relative;
  if (s == "absolute") return BandMode::absolute;
  throw UsageError("unknown band mode '" + s + "' (expected relative or absolute)");
}

SortBy parse_sort_by(const std::string& s) {
  if (s == "a") return SortBy::a_count;
  if (s == "b") return SortBy::b_count;
  throw UsageError("unknown sort order '" + s + "' (expected a or b)");
}

int parse_ngram(int n) {
  if (n != 1 && n != 2) throw UsageError("n-gram order must be 1 or 2");
  return n;
}

std::set<std::string> read_stopword_file(const std::filesystem::path& path) {
  std::set<std::string> words;
  std::istringstream in(detail::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto parts = detail::split_whitespace(line);
    if (!parts.empty() && parts.front().front() != '#') words.insert(detail::to_lower(parts.front()));
  }
  return words;
}

void parse_corpora(const YAML::Node& node, PipelineConfig& cfg, const std::filesystem::path& base_dir) {
  if (!node.IsSequence()) throw UsageError("config: 'corpora' must be a list");
  cfg.corpora.clear();
  for (std::size_t i = 0; i < node.size(); ++i) {
    const YAML::Node c = node[i];
    const std::string prefix = "corpora[" + std::to_string(i) + "]";
    check_keys(c, {"label", "path", "format", "embeddings", "assignments", "coordinates", "topic_labels"}, prefix);
    CorpusSpec spec;
    if (!c["path"]) throw UsageError("config: " + prefix + " needs 'path'");
    spec.path = resolve(base_dir, scalar<std::string>(c["path"], prefix + ".path"));
    spec.label = c["label"] ? scalar<std::string>(c["label"], prefix + ".label") : spec.path.stem().string();
    if (c["format"]) {
      const auto f = scalar<std::string>(c["format"], prefix + ".format");
      if (f != "auto") spec.format = parse_format(f);
    }
    auto opt_path = [&](const char* key, std::optional<std::filesystem::path>& target) {
      if (c[key]) target = resolve(base_dir, scalar<std::string>(c[key], prefix + "." + key));
    };
    opt_path("embeddings", spec.embeddings);
    opt_path("assignments", spec.assignments);
    opt_path("coordinates", spec.coordinates);
    opt_path("topic_labels", spec.topic_labels);
    cfg.corpora.push_back(std::move(spec));
  }
}

void parse_tokenizer(const YAML::Node& t, PipelineConfig& cfg, const std::filesystem::path& base_dir) {
  check_keys(t, {"lowercase", "strip_punctuation", "min_token_chars", "stopwords", "stopwords_file"}, "tokenizer");
  if (t["lowercase"]) cfg.tokenizer.lowercase = scalar<bool>(t["lowercase"], "tokenizer.lowercase");
  if (t["strip_punctuation"]) {
    cfg.tokenizer.strip_punctuation = scalar<bool>(t["strip_punctuation"], "tokenizer.strip_punctuation");
  }
  if (t["min_token_chars"]) {
    cfg.tokenizer.min_token_chars = scalar<std::size_t>(t["min_token_chars"], "tokenizer.min_token_chars");
  }
  if (t["stopwords"] && t["stopwords_file"]) {
    throw UsageError("config: give either tokenizer.stopwords or tokenizer.stopwords_file, not both");
  }
  if (const auto sw = t["stopwords"]) {
    if (sw.IsSequence()) {
      cfg.tokenizer.stopwords.clear();
      for (const auto& w : sw) cfg.tokenizer.stopwords.insert(scalar<std::string>(w, "tokenizer.stopwords"));
      cfg.stopwords_source = "inline";
    } else {
      const auto v = scalar<std::string>(sw, "tokenizer.stopwords");
      if (v == "default") {
        cfg.tokenizer.stopwords = default_stopwords();
      } else if (v == "none") {
        cfg.tokenizer.stopwords.clear();
      } else {
        throw UsageError("config: tokenizer.stopwords must be 'default', 'none' or a list");
      }
      cfg.stopwords_source = v;
    }
  }
  if (t["stopwords_file"]) {
    const auto path = resolve(base_dir, scalar<std::string>(t["stopwords_file"], "tokenizer.stopwords_file"));
    cfg.tokenizer.stopwords = read_stopword_file(path);
    cfg.stopwords_source = path.string();
  }
}

void parse_segmentation(const YAML::Node& s, PipelineConfig& cfg) {
  check_keys(s, {"min_tokens", "max_tokens", "terminators", "abbreviations"}, "segmentation");
  if (s["min_tokens"]) cfg.segmentation.min_tokens = scalar<std::size_t>(s["min_tokens"], "segmentation.min_tokens");
  if (s["max_tokens"]) cfg.segmentation.max_tokens = scalar<std::size_t>(s["max_tokens"], "segmentation.max_tokens");
  if (s["terminators"]) cfg.segmentation.terminators = scalar<std::string>(s["terminators"], "segmentation.terminators");
  if (s["abbreviations"]) {
    cfg.segmentation.abbreviations = scalar<std::vector<std::string>>(s["abbreviations"], "segmentation.abbreviations");
  }
}

void parse_cluster(const YAML::Node& c, PipelineConfig& cfg) {
  check_keys(c, {"method", "k", "noise_threshold", "seed", "max_iters"}, "cluster");
  if (c["method"] && scalar<std::string>(c["method"], "cluster.method") != "kmeans_noise") {
    throw UsageError("config: cluster.method must be kmeans_noise");
  }
  if (c["k"]) cfg.cluster.k_clusters = scalar<std::size_t>(c["k"], "cluster.k");
  if (c["noise_threshold"]) cfg.cluster.noise_threshold = scalar<double>(c["noise_threshold"], "cluster.noise_threshold");
  if (c["seed"]) cfg.cluster.seed = scalar<std::uint64_t>(c["seed"], "cluster.seed");
  if (c["max_iters"]) cfg.cluster.max_iters = scalar<std::size_t>(c["max_iters"], "cluster.max_iters");
}

void parse_metrics(const YAML::Node& m, PipelineConfig& cfg) {
  check_keys(m, {"rank_mode", "topic_rank", "puv_k", "ngram_top_m", "keywords_k", "band_mode", "band_width"}, "metrics");
  if (m["rank_mode"]) cfg.metrics.rank_mode = parse_rank_mode(scalar<std::string>(m["rank_mode"], "metrics.rank_mode"));
  if (m["topic_rank"]) cfg.metrics.topic_rank = scalar<std::size_t>(m["topic_rank"], "metrics.topic_rank");
  if (m["puv_k"]) cfg.metrics.puv_k = scalar<std::size_t>(m["puv_k"], "metrics.puv_k");
  if (m["ngram_top_m"]) cfg.metrics.ngram_top_m = scalar<std::size_t>(m["ngram_top_m"], "metrics.ngram_top_m");
  if (m["keywords_k"]) cfg.keywords_k = scalar<std::size_t>(m["keywords_k"], "metrics.keywords_k");
  if (m["band_mode"]) cfg.band.mode = parse_band_mode(scalar<std::string>(m["band_mode"], "metrics.band_mode"));
  if (m["band_width"]) cfg.band.width = scalar<double>(m["band_width"], "metrics.band_width");
}

void parse_compare(const YAML::Node& c, PipelineConfig& cfg) {
  check_keys(c, {"ngram", "top_k", "sort_by"}, "compare");
  if (c["ngram"]) cfg.ngram = parse_ngram(scalar<int>(c["ngram"], "compare.ngram"));
  if (c["top_k"]) cfg.top_k = scalar<std::size_t>(c["top_k"], "compare.top_k");
  if (c["sort_by"]) cfg.sort_by = parse_sort_by(scalar<std::string>(c["sort_by"], "compare.sort_by"));
}

// ---------------------------------------------------------------------------
// Hashing and manifest.

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

// Directories hash as the sorted (name, content hash) list of their files.
std::pair<std::string, std::uintmax_t> hash_input(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) {
    const auto data = detail::read_file(path);
    return {sha256_hex(data), data.size()};
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(path)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  std::uintmax_t bytes = 0;
  for (const auto& f : files) {
    const auto data = detail::read_file(f);
    bytes += data.size();
    listing += f.filename().string() + "\t" + sha256_hex(data) + "\n";
  }
  return {sha256_hex(listing), bytes};
}

std::string label_arg_error(const std::string& flag) {
  return flag + " expects LABEL=PATH (or PATH when exactly one corpus is given)";
}

bool valid_label(const std::string& label) {
  return !label.empty() && std::all_of(label.begin(), label.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

// ---------------------------------------------------------------------------
// Command-line flags. Every value is applied only when given explicitly.

struct Flags {
  std::string config;
  std::vector<std::string> corpus;
  std::vector<std::string> label;
  std::string format = "auto";
  std::string out_dir;
  std::vector<std::string> embeddings, assignments, coordinates, topic_labels;

  bool no_lowercase = false;
  bool keep_punctuation = false;
  bool no_stopwords = false;
  std::string stopwords_file;
  std::size_t min_token_chars = 2;

  std::size_t min_tokens = 3;
  std::size_t max_tokens = 535;

  std::size_t k = 8;
  double tau = 0.0;
  std::uint64_t seed = 42;
  std::size_t max_iters = 100;
  std::string projection = "pca";

  std::string rank_mode = "single_rank";
  std::size_t topic_rank = 20;
  std::size_t puv_k = 10;
  std::size_t ngram_top_m = 500;
  std::size_t keywords_k = 10;
  std::string band_mode = "relative";
  double band_width = 10.0;

  int ngram = 1;
  std::size_t top_k = 20;
  std::string sort_by = "b";

  std::string grouping;
  std::string runs;
  std::string candidate;
  std::string candidate_file;
};

enum Group : unsigned {
  kCorpus = 1u << 0,
  kTokenizer = 1u << 1,
  kTopics = 1u << 2,
  kProjection = 1u << 3,
  kMetrics = 1u << 4,
  kCompare = 1u << 5,
  kNgram = 1u << 6,
  kGrouping = 1u << 7,
  kSweep = 1u << 8,
  kBand = 1u << 9,
};

void add_flags(CLI::App* sub, Flags& f, unsigned groups) {
  sub->add_option("--config", f.config, "YAML pipeline config; flags override its values");
  sub->add_option("--out", f.out_dir, std::string("Output directory (default: $") + kOutputDirEnv + " or ./out)");
  if (groups & kCorpus) {
    sub->add_option("--corpus", f.corpus, "Corpus path: jsonl file or directory of .txt files (repeatable)");
    sub->add_option("--label", f.label, "Corpus label, aligned with --corpus (repeatable)");
    sub->add_option("--format", f.format, "Corpus format: auto, jsonl or plain_dir");
    sub->add_option("--min-tokens", f.min_tokens, "Minimum sentence length in whitespace tokens");
    sub->add_option("--max-tokens", f.max_tokens, "Maximum sentence length before splitting");
  }
  if (groups & kTokenizer) {
    sub->add_flag("--no-lowercase", f.no_lowercase, "Keep token case");
    sub->add_flag("--keep-punctuation", f.keep_punctuation, "Do not strip punctuation");
    sub->add_flag("--no-stopwords", f.no_stopwords, "Disable stopword removal");
    sub->add_option("--stopwords", f.stopwords_file, "Stopword file, one word per line");
    sub->add_option("--min-token-chars", f.min_token_chars, "Minimum token length in characters");
  }
  if (groups & kTopics) {
    sub->add_option("--embeddings", f.embeddings, "LABEL=PATH of a CEMB or jsonl embedding file (repeatable)");
    sub->add_option("--assignments", f.assignments, "LABEL=PATH of a sentence_id,topic_id CSV (repeatable)");
    sub->add_option("--k", f.k, "Number of k-means clusters");
    sub->add_option("--tau", f.tau, "Cosine noise threshold in [-1, 1]");
    sub->add_option("--seed", f.seed, "Clustering seed");
    sub->add_option("--max-iters", f.max_iters, "Maximum k-means iterations");
    sub->add_option("--keywords-k", f.keywords_k, "Keywords per topic");
  }
  if (groups & kProjection) {
    sub->add_option("--projection", f.projection, "2-D projection: pca or file");
    sub->add_option("--coords", f.coordinates, "LABEL=PATH of a sentence_id,x,y CSV (repeatable)");
  }
  if (groups & kMetrics) {
    sub->add_option("--rank-mode", f.rank_mode, "Topic-20 size mode: single_rank or cumulative");
    sub->add_option("--topic-rank", f.topic_rank, "Topic rank used for the Topic-20 size");
    sub->add_option("--puv-k", f.puv_k, "Keywords per topic used by PUV");
    sub->add_option("--ngram-top-m", f.ngram_top_m, "Number of top corpus bigrams used by the n-gram value");
  }
  if (groups & kBand) {
    sub->add_option("--band-mode", f.band_mode, "Error-size band: relative or absolute");
    sub->add_option("--band-width", f.band_width, "Error-size band width (percent of mean, or points)");
  }
  if (groups & kNgram) sub->add_option("--ngram", f.ngram, "N-gram order: 1 or 2");
  if (groups & kCompare) {
    sub->add_option("--top-k", f.top_k, "Number of shared terms to compare");
    sub->add_option("--sort-by", f.sort_by, "Corpus whose counts order the comparison: a or b");
  }
  if (groups & kGrouping) {
    sub->add_option("--grouping", f.grouping, "YAML thematic grouping config");
    sub->add_option("--labels", f.topic_labels, "LABEL=PATH of a topic_id,label CSV (repeatable)");
  }
  if (groups & kSweep) {
    sub->add_option("--runs", f.runs, "Run record jsonl file");
    sub->add_option("--candidate", f.candidate, "run_id of the candidate model inside --runs");
    sub->add_option("--candidate-file", f.candidate_file, "Run record jsonl holding the candidate model");
  }
}

bool given(const CLI::App* sub, const std::string& name) {
  try {
    return sub->count(name) > 0;
  } catch (const CLI::OptionNotFound&) {
    return false;
  }
}

void attach_per_corpus(const std::vector<std::string>& values, const std::string& flag, PipelineConfig& cfg,
                       std::optional<std::filesystem::path> CorpusSpec::*member) {
  for (const auto& v : values) {
    const auto eq = v.find('=');
    if (eq == std::string::npos) {
      if (cfg.corpora.size() != 1) throw UsageError(label_arg_error(flag));
      cfg.corpora.front().*member = v;
      continue;
    }
    const auto label = v.substr(0, eq);
    auto it = std::find_if(cfg.corpora.begin(), cfg.corpora.end(), [&](const CorpusSpec& s) { return s.label == label; });
    if (it == cfg.corpora.end()) throw UsageError(flag + ": no corpus labelled '" + label + "'");
    (*it).*member = v.substr(eq + 1);
  }
}

PipelineConfig resolve_config(const CLI::App* sub, const Flags& f) {
  PipelineConfig cfg;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') cfg.output_dir = env;
  if (!f.config.empty()) {
    const auto env_out = cfg.output_dir;
    cfg = load_config(f.config);
    if (cfg.output_dir == PipelineConfig{}.output_dir) cfg.output_dir = env_out;
  }
  if (!f.out_dir.empty()) cfg.output_dir = f.out_dir;

  if (!f.corpus.empty()) {
    if (!f.label.empty() && f.label.size() != f.corpus.size()) {
      throw UsageError("--label must be given once per --corpus");
    }
    cfg.corpora.clear();
    for (std::size_t i = 0; i < f.corpus.size(); ++i) {
      CorpusSpec spec;
      spec.path = f.corpus[i];
      spec.label = f.label.empty() ? spec.path.stem().string() : f.label[i];
      cfg.corpora.push_back(std::move(spec));
    }
  } else if (!f.label.empty()) {
    throw UsageError("--label given without --corpus");
  }
  if (given(sub, "--format") && f.format != "auto") {
    for (auto& c : cfg.corpora) c.format = parse_format(f.format);
  }
  attach_per_corpus(f.embeddings, "--embeddings", cfg, &CorpusSpec::embeddings);
  attach_per_corpus(f.assignments, "--assignments", cfg, &CorpusSpec::assignments);
  attach_per_corpus(f.coordinates, "--coords", cfg, &CorpusSpec::coordinates);
  attach_per_corpus(f.topic_labels, "--labels", cfg, &CorpusSpec::topic_labels);

  if (given(sub, "--min-tokens")) cfg.segmentation.min_tokens = f.min_tokens;
  if (given(sub, "--max-tokens")) cfg.segmentation.max_tokens = f.max_tokens;
  if (given(sub, "--no-lowercase")) cfg.tokenizer.lowercase = false;
  if (given(sub, "--keep-punctuation")) cfg.tokenizer.strip_punctuation = false;
  if (given(sub, "--no-stopwords") && given(sub, "--stopwords")) {
    throw UsageError("--no-stopwords and --stopwords are mutually exclusive");
  }
  if (given(sub, "--no-stopwords")) {
    cfg.tokenizer.stopwords.clear();
    cfg.stopwords_source = "none";
  }
  if (given(sub, "--stopwords")) {
    cfg.tokenizer.stopwords = read_stopword_file(f.stopwords_file);
    cfg.stopwords_source = f.stopwords_file;
  }
  if (given(sub, "--min-token-chars")) cfg.tokenizer.min_token_chars = f.min_token_chars;
  if (given(sub, "--k")) cfg.cluster.k_clusters = f.k;
  if (given(sub, "--tau")) cfg.cluster.noise_threshold = f.tau;
  if (given(sub, "--seed")) cfg.cluster.seed = f.seed;
  if (given(sub, "--max-iters")) cfg.cluster.max_iters = f.max_iters;
  if (given(sub, "--keywords-k")) cfg.keywords_k = f.keywords_k;
  if (given(sub, "--projection")) cfg.projection = parse_projection(f.projection);
  if (given(sub, "--rank-mode")) cfg.metrics.rank_mode = parse_rank_mode(f.rank_mode);
  if (given(sub, "--topic-rank")) cfg.metrics.topic_rank = f.topic_rank;
  if (given(sub, "--puv-k")) cfg.metrics.puv_k = f.puv_k;
  if (given(sub, "--ngram-top-m")) cfg.metrics.ngram_top_m = f.ngram_top_m;
  if (given(sub, "--band-mode")) cfg.band.mode = parse_band_mode(f.band_mode);
  if (given(sub, "--band-width")) cfg.band.width = f.band_width;
  if (given(sub, "--ngram")) cfg.ngram = parse_ngram(f.ngram);
  if (given(sub, "--top-k")) cfg.top_k = f.top_k;
  if (given(sub, "--sort-by")) cfg.sort_by = parse_sort_by(f.sort_by);
  if (given(sub, "--grouping")) cfg.grouping = f.grouping;
  if (given(sub, "--runs")) cfg.runs = f.runs;
  if (given(sub, "--candidate")) cfg.candidate = f.candidate;
  if (given(sub, "--candidate-file")) cfg.candidate_file = f.candidate_file;

  std::set<std::string> labels;
  for (const auto& c : cfg.corpora) {
    if (!valid_label(c.label)) {
      throw UsageError("corpus label '" + c.label + "' may only contain letters, digits, '_', '-' and '.'");
    }
    if (!labels.insert(c.label).second) throw UsageError("corpus label '" + c.label + "' is used twice");
    if (c.embeddings && c.assignments) {
      throw UsageError("corpus '" + c.label + "' has both embeddings and assignments; give exactly one topic source");
    }
  }
  cfg.segmentation.validate();
  cfg.cluster.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Pipeline session: loads inputs, writes outputs, records the manifest.

class Session {
 public:
  Session(std::string subcommand, PipelineConfig cfg, std::ostream& out, std::ostream& err)
      : subcommand_(std::move(subcommand)), cfg_(std::move(cfg)), out_(out), err_(err),
        start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg_.output_dir, ec);
    if (ec || !std::filesystem::is_directory(cfg_.output_dir)) {
      throw UsageError("output directory " + cfg_.output_dir.string() + " is not writable");
    }
  }

  const PipelineConfig& config() const { return cfg_; }
  std::ostream& out() { return out_; }

  void record_input(const std::filesystem::path& p) {
    if (std::find(inputs_.begin(), inputs_.end(), p) == inputs_.end()) inputs_.push_back(p);
  }

  void warn(const std::string& msg) {
    err_ << "warning: " << msg << "\n";
    warnings_.push_back(msg);
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& emit) {
    const auto path = cfg_.output_dir / name;
    std::ostringstream buffer;
    emit(buffer);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot write " + path.string());
    file << buffer.str();
    if (!file) throw DataError("write failed for " + path.string());
    outputs_.emplace_back(name, sha256_hex(buffer.str()));
  }

  Corpus& corpus(const CorpusSpec& spec) {
    auto it = corpora_.find(spec.label);
    if (it != corpora_.end()) return it->second;
    record_input(spec.path);
    const CorpusFormat fmt = spec.format ? *spec.format : detect_format(spec.path);
    Corpus c = segment_corpus(load_corpus(spec.path, spec.label, fmt), cfg_.segmentation);
    if (c.sentences.empty()) throw DataError("corpus '" + spec.label + "' has no sentences after segmentation");
    return corpora_.emplace(spec.label, std::move(c)).first->second;
  }

  std::vector<std::string> sentence_ids(const Corpus& c) const {
    std::vector<std::string> ids;
    ids.reserve(c.sentences.size());
    for (const auto& s : c.sentences) ids.push_back(s.sentence_id);
    return ids;
  }

  EmbeddingMatrix embeddings(const CorpusSpec& spec) {
    if (!spec.embeddings) throw UsageError("corpus '" + spec.label + "' has no embeddings (use --embeddings)");
    record_input(*spec.embeddings);
    return load_embeddings(*spec.embeddings, sentence_ids(corpus(spec)));
  }

  bool has_topics(const CorpusSpec& spec) const { return spec.assignments || spec.embeddings; }

  // Ingested assignments, or clustering of the corpus embeddings.
  const TopicAssignment& topics(const CorpusSpec& spec) {
    auto it = topics_.find(spec.label);
    if (it != topics_.end()) return it->second;
    const Corpus& c = corpus(spec);
    TopicAssignment a;
    if (spec.assignments) {
      record_input(*spec.assignments);
      a = read_assignment_csv(*spec.assignments);
      check_coverage(a, c.sentences);
    } else if (spec.embeddings) {
      auto result = cluster_embeddings(embeddings(spec), cfg_.cluster);
      for (const auto& w : result.warnings) warn(spec.label + ": " + w);
      a = std::move(result.assignment);
      clustered_.insert(spec.label);
    } else {
      throw UsageError("corpus '" + spec.label + "' needs --embeddings or --assignments");
    }
    return topics_.emplace(spec.label, std::move(a)).first->second;
  }

  bool clustered(const std::string& label) const { return clustered_.count(label) != 0; }

  const std::vector<TopicKeywords>& keywords(const CorpusSpec& spec) {
    auto it = keywords_.find(spec.label);
    if (it != keywords_.end()) return it->second;
    auto result = ctfidf_keywords(corpus(spec), topics(spec), cfg_.tokenizer, cfg_.keywords_k);
    for (const auto& w : result.warnings) warn(spec.label + ": " + w);
    return keywords_.emplace(spec.label, std::move(result.topics)).first->second;
  }

  const FrequencyTable& table(const CorpusSpec& spec, int n) {
    const auto key = spec.label + "/" + std::to_string(n);
    auto it = tables_.find(key);
    if (it != tables_.end()) return it->second;
    return tables_.emplace(key, count_ngrams(corpus(spec), n, cfg_.tokenizer)).first->second;
  }

  ModelMetrics metrics(const CorpusSpec& spec) {
    return evaluate_model(topics(spec), keywords(spec), table(spec, 2), cfg_.metrics);
  }

  nlohmann::ordered_json run_params(const CorpusSpec& spec) const {
    nlohmann::ordered_json p;
    if (spec.assignments) {
      p["assignments"] = spec.assignments->string();
    } else {
      p["method"] = "kmeans_noise";
      p["k"] = cfg_.cluster.k_clusters;
      p["noise_threshold"] = cfg_.cluster.noise_threshold;
      p["seed"] = cfg_.cluster.seed;
      p["max_iters"] = cfg_.cluster.max_iters;
    }
    return p;
  }

  void write_manifest() {
    for (const auto& spec : cfg_.corpora) {
      if (spec.topic_labels && std::filesystem::exists(*spec.topic_labels)) record_input(*spec.topic_labels);
    }
    nlohmann::ordered_json m;
    m["tool"] = "corpuslens";
    m["version"] = std::string(kVersion);
    m["subcommand"] = subcommand_;
    const auto config_json = config_to_json(cfg_);
    m["config"] = config_json;
    m["config_hash"] = sha256_hex(config_json.dump());
    nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
    for (const auto& p : inputs_) {
      const auto [hash, bytes] = hash_input(p);
      inputs.push_back({{"path", p.string()}, {"sha256", hash}, {"bytes", bytes}});
    }
    m["inputs"] = inputs;
    nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
    for (const auto& [name, hash] : outputs_) outputs.push_back({{"path", name}, {"sha256", hash}});
    m["outputs"] = outputs;
    m["versions"] = {{"corpuslens", std::string(kVersion)},
                     {"icu", U_ICU_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
    m["warnings"] = warnings_;
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    m["timings"] = {{"wall_ms", std::chrono::duration<double, std::milli>(elapsed).count()}};
    const auto path = cfg_.output_dir / ("manifest_" + subcommand_ + ".json");
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot write " + path.string());
    file << m.dump(2) << '\n';
  }

 private:
  std::string subcommand_;
  PipelineConfig cfg_;
  std::ostream& out_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::vector<std::string> warnings_;
  std::map<std::string, Corpus> corpora_;
  std::map<std::string, TopicAssignment> topics_;
  std::set<std::string> clustered_;
  std::map<std::string, std::vector<TopicKeywords>> keywords_;
  std::map<std::string, FrequencyTable> tables_;
};

void require_corpora(const PipelineConfig& cfg, const std::string& sub, std::size_t exactly = 0) {
  if (cfg.corpora.empty()) throw UsageError(sub + ": no corpus given (use --corpus or a config file)");
  if (exactly != 0 && cfg.corpora.size() != exactly) {
    throw UsageError(sub + " needs exactly " + std::to_string(exactly) + " corpora, got " +
                     std::to_string(cfg.corpora.size()));
  }
}

// ---------------------------------------------------------------------------
// Subcommands.

void cmd_ingest(Session& s) {
  require_corpora(s.config(), "ingest");
  for (const auto& spec : s.config().corpora) {
    const Corpus& c = s.corpus(spec);
    s.write("sentences_" + spec.label + ".jsonl", [&](std::ostream& os) { write_sentences_jsonl(os, c.sentences); });
    s.out() << spec.label << ": " << c.documents.size() << " documents, " << c.sentences.size() << " sentences\n";
  }
}

void cmd_stats(Session& s) {
  require_corpora(s.config(), "stats");
  std::vector<std::pair<std::string, CorpusStats>> rows;
  for (const auto& spec : s.config().corpora) rows.emplace_back(spec.label, corpus_stats(s.corpus(spec)));
  s.write("corpus_stats.csv", [&](std::ostream& os) { write_corpus_stats_csv(os, rows); });
  write_corpus_stats_csv(s.out(), rows);
}

std::string freq_name(const std::string& label, int n) { return "freq_" + label + "_n" + std::to_string(n) + ".csv"; }

void cmd_freq(Session& s) {
  require_corpora(s.config(), "freq");
  const int n = s.config().ngram;
  for (const auto& spec : s.config().corpora) {
    const auto& t = s.table(spec, n);
    s.write(freq_name(spec.label, n), [&](std::ostream& os) { write_frequency_csv(os, t); });
    s.out() << spec.label << ": " << t.vocab_size() << " types, " << t.total_tokens() << " tokens\n";
  }
}

ComparisonResult compare_frequencies(Session& s) {
  const auto& cfg = s.config();
  const auto& a = cfg.corpora[0];
  const auto& b = cfg.corpora[1];
  auto result = compare_top_k(s.table(a, cfg.ngram), s.table(b, cfg.ngram), cfg.top_k, cfg.sort_by);
  for (const auto& w : result.warnings) s.warn(w);
  s.write("compare_freq.csv", [&](std::ostream& os) { write_comparison_csv(os, result.rows); });
  return result;
}

void cmd_compare_freq(Session& s) {
  require_corpora(s.config(), "compare-freq", 2);
  const auto result = compare_frequencies(s);
  write_comparison_csv(s.out(), result.rows);
}

void write_topic_outputs(Session& s, const CorpusSpec& spec, bool with_plot) {
  const auto& a = s.topics(spec);
  if (s.clustered(spec.label)) {
    s.write("assignments_" + spec.label + ".csv", [&](std::ostream& os) { write_assignment_csv(os, a); });
  }
  if (!with_plot) return;
  const auto& cfg = s.config();
  if (cfg.projection == ProjectionMethod::ingest_file && !spec.coordinates) {
    throw UsageError("projection 'file' needs --coords for corpus '" + spec.label + "'");
  }
  const EmbeddingMatrix m = s.embeddings(spec);
  if (spec.coordinates) s.record_input(*spec.coordinates);
  const auto points = project_2d(m, cfg.projection, spec.coordinates.value_or(std::filesystem::path{}));
  s.write("plot_" + spec.label + ".csv", [&](std::ostream& os) { write_plot_csv(os, m.ids(), points, a); });
}

void cmd_cluster(Session& s) {
  require_corpora(s.config(), "cluster");
  for (const auto& spec : s.config().corpora) {
    if (!spec.embeddings) throw UsageError("cluster: corpus '" + spec.label + "' needs --embeddings");
    write_topic_outputs(s, spec, true);
    const auto& a = s.topics(spec);
    s.out() << spec.label << ": " << a.topic_sizes().size() << " topics, " << a.noise_count() << " noise sentences\n";
  }
}

void cmd_keywords(Session& s) {
  require_corpora(s.config(), "keywords");
  for (const auto& spec : s.config().corpora) {
    write_topic_outputs(s, spec, false);
    const auto& kw = s.keywords(spec);
    s.write("keywords_" + spec.label + ".csv", [&](std::ostream& os) { write_keywords_csv(os, kw); });
    s.out() << spec.label << ": keywords for " << kw.size() << " topics\n";
  }
}

void emit_metrics(Session& s, const CorpusSpec& spec, const ModelMetrics& m) {
  const auto& cfg = s.config();
  s.write("metrics_" + spec.label + ".csv", [&](std::ostream& os) { write_metrics_csv(os, m, cfg.metrics); });
  const RunRecord run{spec.label, s.run_params(spec), m};
  s.write("run_" + spec.label + ".jsonl",
          [&](std::ostream& os) { write_run_records_jsonl(os, std::span<const RunRecord>(&run, 1)); });
}

void cmd_eval(Session& s) {
  require_corpora(s.config(), "eval");
  for (const auto& spec : s.config().corpora) {
    write_topic_outputs(s, spec, false);
    const auto m = s.metrics(spec);
    s.write("keywords_" + spec.label + ".csv", [&](std::ostream& os) { write_keywords_csv(os, s.keywords(spec)); });
    emit_metrics(s, spec, m);
    s.out() << spec.label << ":\n";
    write_metrics_csv(s.out(), m, s.config().metrics);
  }
}

void cmd_sweep(Session& s) {
  const auto& cfg = s.config();
  if (!cfg.runs) throw UsageError("sweep needs --runs");
  if (cfg.candidate && cfg.candidate_file) throw UsageError("give --candidate or --candidate-file, not both");
  s.record_input(*cfg.runs);
  const auto runs = read_run_records_jsonl(*cfg.runs);
  if (runs.empty()) throw DataError("run file " + cfg.runs->string() + " holds no runs");

  const auto filtered = error_size_filter(runs, cfg.band);
  s.write("error_size.csv", [&](std::ostream& os) {
    detail::write_csv_row(os, {"run_id", "appearance_pct", "lower", "upper", "kept"});
    for (const auto& r : runs) {
      const bool kept = std::any_of(filtered.kept.begin(), filtered.kept.end(),
                                    [&](const RunRecord& k) { return k.run_id == r.run_id; });
      detail::write_csv_row(os, {r.run_id, detail::format_fixed(r.metrics.appearance_pct, 2),
                                 detail::format_fixed(filtered.lower, 2), detail::format_fixed(filtered.upper, 2),
                                 kept ? "true" : "false"});
    }
  });

  const auto summary = sweep_summary(runs);
  std::optional<ModelMetrics> candidate;
  if (cfg.candidate) {
    auto it = std::find_if(runs.begin(), runs.end(), [&](const RunRecord& r) { return r.run_id == *cfg.candidate; });
    if (it == runs.end()) throw UsageError("candidate run '" + *cfg.candidate + "' is not in " + cfg.runs->string());
    candidate = it->metrics;
  } else if (cfg.candidate_file) {
    s.record_input(*cfg.candidate_file);
    const auto c = read_run_records_jsonl(*cfg.candidate_file);
    if (c.size() != 1) throw DataError("candidate file must hold exactly one run record");
    candidate = c.front().metrics;
  }
  s.write("sweep_summary.csv", [&](std::ostream& os) {
    if (candidate) {
      write_summary_csv(os, compare_to_sweep(*candidate, summary, cfg.band));
      return;
    }
    detail::write_csv_row(os, {"metric", "candidate", "mean", "std", "min", "max", "verdict"});
    for (Metric m : kAllMetrics) {
      const auto& ms = summary[m];
      detail::write_csv_row(os, {metric_name(m), "", detail::format_fixed(ms.mean, 2), detail::format_fixed(ms.std, 2),
                                 detail::format_fixed(ms.min, 2), detail::format_fixed(ms.max, 2), ""});
    }
  });

  const auto ranked = rank_runs(filtered.kept);
  s.write("ranked_runs.csv", [&](std::ostream& os) {
    detail::write_csv_row(os, {"rank", "run_id", "composite", "gini", "appearance_pct", "topic20_size", "puv",
                               "ngram_value"});
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const auto& m = ranked[i].run.metrics;
      detail::write_csv_row(os, {std::to_string(i + 1), ranked[i].run.run_id, detail::format_fixed(ranked[i].composite, 4),
                                 detail::format_fixed(m.gini, 2), detail::format_fixed(m.appearance_pct, 2),
                                 std::to_string(m.topic20_size), detail::format_fixed(m.puv, 2),
                                 detail::format_fixed(m.ngram_value, 2)});
    }
  });
  s.out() << runs.size() << " runs, " << filtered.kept.size() << " within the error band ["
          << detail::format_fixed(filtered.lower, 2) << ", " << detail::format_fixed(filtered.upper, 2) << "]\n";
}

std::optional<OverlapReport> overlap_models(Session& s) {
  const auto& cfg = s.config();
  const auto& a = cfg.corpora[0];
  const auto& b = cfg.corpora[1];
  const auto pool_a = keyword_pool(s.table(a, 1), s.table(a, 2), a.label);
  const auto pool_b = keyword_pool(s.table(b, 1), s.table(b, 2), b.label);
  const auto report = keyword_overlap(s.keywords(a), s.keywords(b), pool_a, pool_b);
  s.write("keyword_overlap.csv", [&](std::ostream& os) { write_overlap_csv(os, report, a.label, b.label); });
  s.write("shared_keywords.csv", [&](std::ostream& os) {
    detail::write_csv_row(os, {"term", "count_" + a.label, "count_" + b.label});
    for (const auto& t : report.shared_terms) {
      detail::write_csv_row(os, {t, std::to_string(detail::pool_count(pool_a, t)),
                                 std::to_string(detail::pool_count(pool_b, t))});
    }
  });
  return report;
}

void apply_grouping(Session& s) {
  const auto& cfg = s.config();
  if (!cfg.grouping) return;
  s.record_input(*cfg.grouping);
  const auto grouping = load_grouping_config(*cfg.grouping);
  bool any = false;
  for (const auto& spec : cfg.corpora) {
    if (!spec.topic_labels || !s.has_topics(spec)) continue;
    any = true;
    const auto labels = read_topic_labels_csv(*spec.topic_labels);
    const auto table = apply_thematic_grouping(labels, grouping, s.topics(spec));
    s.write("thematic_groups_" + spec.label + ".csv", [&](std::ostream& os) { write_grouping_csv(os, table); });
  }
  if (!any) s.warn("grouping config given but no corpus has topic labels (--labels)");
}

void cmd_compare_models(Session& s) {
  require_corpora(s.config(), "compare-models", 2);
  for (const auto& spec : s.config().corpora) write_topic_outputs(s, spec, false);
  const auto report = overlap_models(s);
  apply_grouping(s);
  s.out() << report->shared_terms.size() << " shared keywords; " << detail::format_fixed(report->pct_a, 2) << "% of "
          << s.config().corpora[0].label << " pool, " << detail::format_fixed(report->pct_b, 2) << "% of "
          << s.config().corpora[1].label << " pool\n";
}

void cmd_report(Session& s) {
  const auto& cfg = s.config();
  require_corpora(cfg, "report", 2);
  ReportInputs in;
  std::vector<std::pair<std::string, CorpusStats>> stats_rows;
  CorpusArtifacts* artifacts[2] = {&in.a, &in.b};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& spec = cfg.corpora[i];
    artifacts[i]->label = spec.label;
    artifacts[i]->stats = corpus_stats(s.corpus(spec));
    stats_rows.emplace_back(spec.label, *artifacts[i]->stats);
  }
  s.write("corpus_stats.csv", [&](std::ostream& os) { write_corpus_stats_csv(os, stats_rows); });
  for (const auto& spec : cfg.corpora) {
    const auto& t = s.table(spec, cfg.ngram);
    s.write(freq_name(spec.label, cfg.ngram), [&](std::ostream& os) { write_frequency_csv(os, t); });
  }
  in.frequency = compare_frequencies(s);

  bool both_keywords = true;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& spec = cfg.corpora[i];
    if (!s.has_topics(spec)) {
      artifacts[i]->metrics_gap = "no embeddings or topic assignments supplied";
      both_keywords = false;
      continue;
    }
    write_topic_outputs(s, spec, spec.embeddings.has_value());
    try {
      const auto m = s.metrics(spec);
      s.write("keywords_" + spec.label + ".csv", [&](std::ostream& os) { write_keywords_csv(os, s.keywords(spec)); });
      emit_metrics(s, spec, m);
      artifacts[i]->metrics = m;
    } catch (const DataError& e) {
      artifacts[i]->metrics_gap = e.what();
      s.warn(spec.label + ": metrics unavailable: " + e.what());
      both_keywords = false;
    }
  }
  if (both_keywords) {
    in.overlap = overlap_models(s);
  } else {
    in.overlap_gap = "keyword lists require topic assignments for both corpora";
  }
  apply_grouping(s);
  const std::string md = side_by_side_report(in);
  s.write("report.md", [&](std::ostream& os) { os << md; });
  s.out() << "report written to " << (cfg.output_dir / "report.md").string() << "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

PipelineConfig parse_config(const std::string& yaml_text, PipelineConfig cfg, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!root || root.IsNull()) return cfg;
  check_keys(root,
             {"corpora", "tokenizer", "segmentation", "cluster", "projection", "metrics", "compare", "grouping", "runs",
              "candidate", "candidate_file", "output_dir"},
             "");
  if (root["corpora"]) parse_corpora(root["corpora"], cfg, base_dir);
  if (root["tokenizer"]) parse_tokenizer(root["tokenizer"], cfg, base_dir);
  if (root["segmentation"]) parse_segmentation(root["segmentation"], cfg);
  if (root["cluster"]) parse_cluster(root["cluster"], cfg);
  if (root["projection"]) cfg.projection = parse_projection(scalar<std::string>(root["projection"], "projection"));
  if (root["metrics"]) parse_metrics(root["metrics"], cfg);
  if (root["compare"]) parse_compare(root["compare"], cfg);
  if (root["grouping"]) cfg.grouping = resolve(base_dir, scalar<std::string>(root["grouping"], "grouping"));
  if (root["runs"]) cfg.runs = resolve(base_dir, scalar<std::string>(root["runs"], "runs"));
  if (root["candidate"]) cfg.candidate = scalar<std::string>(root["candidate"], "candidate");
  if (root["candidate_file"]) {
    cfg.candidate_file = resolve(base_dir, scalar<std::string>(root["candidate_file"], "candidate_file"));
  }
  if (root["output_dir"]) cfg.output_dir = resolve(base_dir, scalar<std::string>(root["output_dir"], "output_dir"));
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const DataError&) {
    throw UsageError("cannot read config file " + path.string());
  }
  return parse_config(text, {}, path.parent_path());
}

ThematicGroupingConfig load_grouping_config(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw DataError("grouping config " + path.string() + ": " + e.what());
  }
  ThematicGroupingConfig cfg;
  try {
    check_keys(root, {"groups"}, "");
    const auto groups = root["groups"];
    if (!groups || !groups.IsSequence()) throw UsageError("grouping config needs a 'groups' list");
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto g = groups[i];
      const std::string prefix = "groups[" + std::to_string(i) + "]";
      check_keys(g, {"name", "labels", "note"}, prefix);
      if (!g["name"]) throw UsageError("grouping config: " + prefix + " needs 'name'");
      ThematicGroup group;
      group.name = scalar<std::string>(g["name"], prefix + ".name");
      if (g["labels"]) group.topic_labels = scalar<std::vector<std::string>>(g["labels"], prefix + ".labels");
      if (g["note"]) group.note = scalar<std::string>(g["note"], prefix + ".note");
      cfg.groups.push_back(std::move(group));
    }
  } catch (const UsageError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json corpora = nlohmann::ordered_json::array();
  for (const auto& c : cfg.corpora) {
    nlohmann::ordered_json cj;
    cj["label"] = c.label;
    cj["path"] = c.path.string();
    cj["format"] = c.format ? format_name(*c.format) : "auto";
    auto opt = [](const std::optional<std::filesystem::path>& p) {
      return p ? nlohmann::ordered_json(p->string()) : nlohmann::ordered_json(nullptr);
    };
    cj["embeddings"] = opt(c.embeddings);
    cj["assignments"] = opt(c.assignments);
    cj["coordinates"] = opt(c.coordinates);
    cj["topic_labels"] = opt(c.topic_labels);
    corpora.push_back(cj);
  }
  j["corpora"] = corpora;
  j["tokenizer"] = {{"lowercase", cfg.tokenizer.lowercase},
                    {"strip_punctuation", cfg.tokenizer.strip_punctuation},
                    {"min_token_chars", cfg.tokenizer.min_token_chars},
                    {"stopwords_source", cfg.stopwords_source},
                    {"stopword_count", cfg.tokenizer.stopwords.size()}};
  j["segmentation"] = {{"min_tokens", cfg.segmentation.min_tokens},
                       {"max_tokens", cfg.segmentation.max_tokens},
                       {"terminators", cfg.segmentation.terminators},
                       {"abbreviations", cfg.segmentation.abbreviations}};
  j["cluster"] = {{"method", "kmeans_noise"},
                  {"k", cfg.cluster.k_clusters},
                  {"noise_threshold", cfg.cluster.noise_threshold},
                  {"seed", cfg.cluster.seed},
                  {"max_iters", cfg.cluster.max_iters}};
  j["projection"] = cfg.projection == ProjectionMethod::pca ? "pca" : "file";
  j["metrics"] = {{"rank_mode", cfg.metrics.rank_mode == RankMode::single_rank ? "single_rank" : "cumulative"},
                  {"topic_rank", cfg.metrics.topic_rank},
                  {"puv_k", cfg.metrics.puv_k},
                  {"puv_formula", std::string(kPuvFormula)},
                  {"ngram_top_m", cfg.metrics.ngram_top_m},
                  {"keywords_k", cfg.keywords_k},
                  {"band_mode", cfg.band.mode == BandMode::relative ? "relative" : "absolute"},
                  {"band_width", cfg.band.width}};
  j["compare"] = {{"ngram", cfg.ngram}, {"top_k", cfg.top_k}, {"sort_by", cfg.sort_by == SortBy::a_count ? "a" : "b"}};
  auto opt = [](const auto& v) -> nlohmann::ordered_json {
    if (!v) return nullptr;
    if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::filesystem::path>) {
      return v->string();
    } else {
      return *v;
    }
  };
  j["grouping"] = opt(cfg.grouping);
  j["runs"] = opt(cfg.runs);
  j["candidate"] = opt(cfg.candidate);
  j["candidate_file"] = opt(cfg.candidate_file);
  j["output_dir"] = cfg.output_dir.string();
  return j;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"corpuslens: corpus comparison and topic-model evaluation", "corpuslens"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kVersion));

  Flags flags;
  struct Command {
    const char* name;
    const char* description;
    unsigned groups;
    void (*run)(Session&);
  };
  const Command commands[] = {
      {"ingest", "Segment corpora and write sentence jsonl", kCorpus, cmd_ingest},
      {"stats", "Sentence-level corpus statistics", kCorpus, cmd_stats},
      {"freq", "Unigram or bigram frequency tables", kCorpus | kTokenizer | kNgram, cmd_freq},
      {"compare-freq", "Top-k shared-term percentile comparison of two corpora", kCorpus | kTokenizer | kNgram | kCompare,
       cmd_compare_freq},
      {"cluster", "Cluster sentence embeddings and export plot data", kCorpus | kTopics | kProjection, cmd_cluster},
      {"keywords", "Class-based TF-IDF keywords per topic", kCorpus | kTokenizer | kTopics, cmd_keywords},
      {"eval", "Topic-model quality metrics", kCorpus | kTokenizer | kTopics | kMetrics, cmd_eval},
      {"sweep", "Summarize a sweep of runs and compare a candidate", kSweep | kBand, cmd_sweep},
      {"compare-models", "Keyword overlap and thematic grouping across two models",
       kCorpus | kTokenizer | kTopics | kGrouping, cmd_compare_models},
      {"report", "Full side-by-side pipeline and report",
       kCorpus | kTokenizer | kTopics | kProjection | kMetrics | kCompare | kNgram | kGrouping, cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.description);
    add_flags(sub, flags, c.groups);
    subs.emplace_back(sub, &c);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitUsage;
  }

  for (const auto& [sub, command] : subs) {
    if (!sub->parsed()) continue;
    try {
      Session session(command->name, resolve_config(sub, flags), out, err);
      command->run(session);
      session.write_manifest();
      return kExitOk;
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n\n" << sub->help();
      return kExitUsage;
    } catch (const TermNotFound& e) {
      err << "error: " << e.what() << "\n";
      return kExitData;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
      err << "error: " << e.what() << "\n";
      return kExitData;
    }
  }
  return kExitUsage;
}

}  // namespace corpuslens::cli
