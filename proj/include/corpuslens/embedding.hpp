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

// Per-sentence embedding matrix and its two on-disk formats.
//
// Binary layout ("CEMB"):
//   bytes 0..3   ASCII "CEMB"
//   bytes 4..7   u32 n (little-endian)
//   bytes 8..11  u32 d (little-endian)
//   then n*d IEEE-754 float32 values, little-endian, row-major.
//
// JSON lines alternative: {"sentence_id": "...", "vector": [ ... ]} per line.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpuslens/detail/csv.hpp"
#include "corpuslens/error.hpp"

namespace corpuslens {

inline constexpr char kEmbeddingMagic[4] = {'C', 'E', 'M', 'B'};
inline constexpr double kUnitNormTolerance = 1e-6;

enum class EmbeddingFormat { binary, jsonl };

class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  // values is row-major n*d with n = ids.size().
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> values)
      : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw DataError("embedding dimension must be positive");
    if (values_.size() != ids_.size() * dim_) {
      throw DataError("embedding value count " + std::to_string(values_.size()) + " does not match " +
                      std::to_string(ids_.size()) + " rows x " + std::to_string(dim_));
    }
    normalized_ = !ids_.empty();
    for (std::size_t r = 0; r < rows(); ++r) {
      double sq = 0.0;
      for (float v : row(r)) {
        if (!std::isfinite(v)) {
          throw DataError("non-finite embedding value in row " + std::to_string(r) + " (sentence '" + ids_[r] +
                          "')");
        }
        sq += static_cast<double>(v) * v;
      }
      if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) normalized_ = false;
    }
  }

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool normalized() const noexcept { return normalized_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const float> values() const noexcept { return values_; }

  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(values_).subspan(r * dim_, dim_);
  }

  bool operator==(const EmbeddingMatrix& other) const {
    return ids_ == other.ids_ && dim_ == other.dim_ && values_.size() == other.values_.size() &&
           std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(float)) == 0;
  }

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  bool normalized_ = false;
};

// Rows scaled to unit Euclidean norm. A zero row has no direction and is rejected.
inline EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m) {
  if (m.normalized()) return m;
  std::vector<float> out(m.values().begin(), m.values().end());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sq = 0.0;
    for (float v : m.row(r)) sq += static_cast<double>(v) * v;
    if (sq == 0.0) throw DataError("cannot normalize zero vector for sentence '" + m.ids()[r] + "'");
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t c = 0; c < m.dim(); ++c) {
      auto& v = out[r * m.dim() + c];
      v = static_cast<float>(static_cast<double>(v) * inv);
    }
  }
  return EmbeddingMatrix(m.ids(), m.dim(), std::move(out));
}

namespace detail {

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  os.write(bytes, 4);
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

struct RawEmbeddings {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> values;
};

inline void write_embeddings_binary(std::ostream& os, std::size_t n, std::size_t d, std::span<const float> values) {
  if (values.size() != n * d) throw UsageError("write_embeddings_binary: value count does not match n*d");
  if (n > UINT32_MAX || d > UINT32_MAX) throw UsageError("write_embeddings_binary: matrix too large");
  os.write(kEmbeddingMagic, 4);
  detail::put_u32_le(os, static_cast<std::uint32_t>(n));
  detail::put_u32_le(os, static_cast<std::uint32_t>(d));
  for (float v : values) detail::put_u32_le(os, std::bit_cast<std::uint32_t>(v));
}

inline void write_embeddings_binary(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_embeddings_binary(out, m.rows(), m.dim(), m.values());
  if (!out) throw DataError("write failed for " + path.string());
}

inline RawEmbeddings parse_embeddings_binary(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12) throw DataError("embedding file truncated: header needs 12 bytes");
  if (std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) throw DataError("embedding file has bad magic (expected \"CEMB\")");
  RawEmbeddings raw;
  raw.n = detail::get_u32_le(bytes.data() + 4);
  raw.d = detail::get_u32_le(bytes.data() + 8);
  if (raw.d == 0) throw DataError("embedding file declares dimension 0");
  const std::uint64_t expected = static_cast<std::uint64_t>(raw.n) * raw.d * 4;
  const std::uint64_t found = bytes.size() - 12;
  if (expected != found) {
    throw DataError("embedding payload size mismatch: header implies " + std::to_string(expected) +
                    " bytes, found " + std::to_string(found));
  }
  raw.values.resize(raw.n * raw.d);
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    raw.values[i] = std::bit_cast<float>(detail::get_u32_le(bytes.data() + 12 + 4 * i));
  }
  return raw;
}

inline RawEmbeddings read_embeddings_binary(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  return parse_embeddings_binary(
      std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(data.data()), data.size()));
}

inline void write_embeddings_jsonl(std::ostream& os, const EmbeddingMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::ordered_json j;
    j["sentence_id"] = m.ids()[r];
    j["vector"] = std::vector<float>(m.row(r).begin(), m.row(r).end());
    os << j.dump() << '\n';
  }
}

inline EmbeddingFormat sniff_embedding_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read embedding file " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::memcmp(magic, kEmbeddingMagic, 4) == 0 ? EmbeddingFormat::binary
                                                                        : EmbeddingFormat::jsonl;
}

namespace detail {

inline EmbeddingMatrix load_embeddings_jsonl(const std::filesystem::path& path, const std::vector<std::string>& index) {
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (!position.emplace(index[i], i).second) throw UsageError("sentence index contains duplicate id '" + index[i] + "'");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read embedding file " + path.string());
  std::optional<std::size_t> dim;
  std::vector<float> values;
  std::vector<bool> seen(index.size(), false);
  std::size_t records = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed embedding record (" + e.what() + ")");
    }
    if (!j.is_object() || !j.contains("sentence_id") || !j["sentence_id"].is_string() || !j.contains("vector") ||
        !j["vector"].is_array()) {
      throw DataError(where + ": embedding record needs \"sentence_id\" and \"vector\"");
    }
    const auto id = j["sentence_id"].get<std::string>();
    const auto& vec = j["vector"];
    if (!dim) {
      if (vec.empty()) throw DataError(where + ": empty vector for sentence '" + id + "'");
      dim = vec.size();
      values.assign(index.size() * *dim, 0.0f);
    } else if (vec.size() != *dim) {
      throw DataError("embedding dimension mismatch for sentence '" + id + "': expected " + std::to_string(*dim) +
                      ", found " + std::to_string(vec.size()));
    }
    ++records;
    auto it = position.find(id);
    if (it == position.end()) {
      throw DataError(where + ": sentence '" + id + "' is not in the sentence index");
    }
    if (seen[it->second]) throw DataError(where + ": duplicate vector for sentence '" + id + "'");
    seen[it->second] = true;
    for (std::size_t c = 0; c < *dim; ++c) {
      if (!vec[c].is_number()) {
        throw DataError(where + ": non-numeric value in vector for sentence '" + id + "'");
      }
      values[it->second * *dim + c] = static_cast<float>(vec[c].get<double>());
    }
  }
  if (records != index.size()) {
    throw DataError("embedding count mismatch: file has " + std::to_string(records) + " vectors, index has " +
                    std::to_string(index.size()) + " sentences");
  }
  if (!dim) throw DataError("embedding file " + path.string() + " is empty");
  return EmbeddingMatrix(index, *dim, std::move(values));
}

}  // namespace detail

// Loads either format (detected from the magic bytes unless given) and aligns
// rows to the sentence index.
inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const std::vector<std::string>& index,
                                       std::optional<EmbeddingFormat> format = std::nullopt) {
  const EmbeddingFormat fmt = format ? *format : sniff_embedding_format(path);
  if (fmt == EmbeddingFormat::jsonl) return detail::load_embeddings_jsonl(path, index);
  RawEmbeddings raw = read_embeddings_binary(path);
  if (raw.n != index.size()) {
    throw DataError("embedding count mismatch: file has " + std::to_string(raw.n) + " rows, index has " +
                    std::to_string(index.size()) + " sentences");
  }
  return EmbeddingMatrix(index, raw.d, std::move(raw.values));
}

}  // namespace corpuslens
