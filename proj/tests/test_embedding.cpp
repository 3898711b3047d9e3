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

#include <cstring>
#include <limits>
#include <sstream>

#include "corpuslens/embedding.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace corpuslens;

namespace {

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("s" + std::to_string(i));
  return out;
}

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::string header(const char* magic, std::uint32_t n, std::uint32_t d) {
  std::string h(magic, 4);
  for (std::uint32_t v : {n, d}) {
    for (int b = 0; b < 4; ++b) h.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  return h;
}

std::string error_of(const std::string& data) {
  const auto b = bytes_of(data);
  try {
    parse_embeddings_binary(b);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(EmbeddingBinary, ExactByteLayout) {
  std::ostringstream os;
  const std::vector<float> v = {1.0f, -2.0f};
  write_embeddings_binary(os, 1, 2, v);
  const std::string s = os.str();
  ASSERT_EQ(s.size(), 20u);
  EXPECT_EQ(s.substr(0, 4), "CEMB");
  EXPECT_EQ(s.substr(4, 8), std::string("\x01\0\0\0\x02\0\0\0", 8));
  // 1.0f = 0x3F800000, -2.0f = 0xC0000000, little-endian.
  EXPECT_EQ(s.substr(12), std::string("\0\0\x80\x3f\0\0\0\xc0", 8));
}

TEST(EmbeddingBinary, UnitRowsDetectedAsNormalized) {
  TempDir dir;
  const EmbeddingMatrix m(ids(2), 3, {1, 0, 0, 0, 1, 0});
  write_embeddings_binary(dir / "e.bin", m);
  const auto loaded = load_embeddings(dir / "e.bin", ids(2));
  EXPECT_TRUE(loaded.normalized());
  EXPECT_EQ(loaded.rows(), 2u);
  EXPECT_EQ(loaded.dim(), 3u);
  EXPECT_FALSE(EmbeddingMatrix(ids(1), 2, {1, 1}).normalized());
}

TEST(EmbeddingBinary, RandomMatrixRoundTripsBitExactly) {
  TempDir dir;
  std::mt19937_64 rng(99);
  std::vector<float> v(1000 * 32);
  for (auto& x : v) {
    std::uint32_t bits;
    do {
      bits = static_cast<std::uint32_t>(rng());
      std::memcpy(&x, &bits, 4);
    } while (!std::isfinite(x));
  }
  const EmbeddingMatrix m(ids(1000), 32, v);
  write_embeddings_binary(dir / "e.bin", m);
  const auto loaded = load_embeddings(dir / "e.bin", ids(1000));
  EXPECT_EQ(loaded, m);
  EXPECT_EQ(std::memcmp(loaded.values().data(), v.data(), v.size() * 4), 0);
}

TEST(EmbeddingBinary, MalformedHeadersRejected) {
  EXPECT_NE(error_of("CEM").find("truncated"), std::string::npos);
  EXPECT_NE(error_of(header("CEMX", 1, 1) + std::string(4, '\0')).find("bad magic"), std::string::npos);
  EXPECT_NE(error_of(header("CEMB", 1, 0)).find("dimension 0"), std::string::npos);
  EXPECT_NE(error_of(header("CEMB", 2, 2) + std::string(12, '\0')).find("size mismatch"), std::string::npos);
  EXPECT_NE(error_of(header("CEMB", 1, 1) + std::string(5, '\0')).find("size mismatch"), std::string::npos);
  EXPECT_EQ(error_of(header("CEMB", 0, 4)), "");
}

TEST(EmbeddingBinary, RowCountMustMatchIndex) {
  TempDir dir;
  write_embeddings_binary(dir / "e.bin", EmbeddingMatrix(ids(2), 2, {1, 0, 0, 1}));
  EXPECT_THROW(load_embeddings(dir / "e.bin", ids(3)), DataError);
}

TEST(EmbeddingMatrix, NonFiniteValueNamesRow) {
  try {
    EmbeddingMatrix(ids(2), 2, {1, 0, 0, std::numeric_limits<float>::quiet_NaN()});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos) << e.what();
  }
}

TEST(EmbeddingMatrix, NormalizeRows) {
  const auto m = normalize_rows(EmbeddingMatrix(ids(2), 2, {3, 4, 0, -2}));
  EXPECT_TRUE(m.normalized());
  EXPECT_FLOAT_EQ(m.row(0)[0], 0.6f);
  EXPECT_FLOAT_EQ(m.row(1)[1], -1.0f);
  EXPECT_THROW(normalize_rows(EmbeddingMatrix(ids(1), 2, {0, 0})), DataError);
}

TEST(EmbeddingJsonl, AlignsToIndexOrder) {
  TempDir dir;
  write_text(dir / "e.jsonl", "{\"sentence_id\":\"s1\",\"vector\":[0,1]}\n{\"sentence_id\":\"s0\",\"vector\":[1,0]}\n");
  const auto m = load_embeddings(dir / "e.jsonl", ids(2));
  EXPECT_EQ(m.row(0)[0], 1.0f);
  EXPECT_EQ(m.row(1)[1], 1.0f);
  EXPECT_TRUE(m.normalized());
}

TEST(EmbeddingJsonl, InconsistentLengthNamesSentence) {
  TempDir dir;
  write_text(dir / "e.jsonl", "{\"sentence_id\":\"s0\",\"vector\":[1,0]}\n{\"sentence_id\":\"s1\",\"vector\":[1,0,0]}\n");
  try {
    load_embeddings(dir / "e.jsonl", ids(2));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'s1'"), std::string::npos) << e.what();
  }
}

TEST(EmbeddingJsonl, CountAndIdErrors) {
  TempDir dir;
  write_text(dir / "short.jsonl", "{\"sentence_id\":\"s0\",\"vector\":[1,0]}\n");
  EXPECT_THROW(load_embeddings(dir / "short.jsonl", ids(2)), DataError);
  write_text(dir / "dup.jsonl", "{\"sentence_id\":\"s0\",\"vector\":[1,0]}\n{\"sentence_id\":\"s0\",\"vector\":[1,0]}\n");
  EXPECT_THROW(load_embeddings(dir / "dup.jsonl", ids(2)), DataError);
  write_text(dir / "unknown.jsonl", "{\"sentence_id\":\"zz\",\"vector\":[1,0]}\n");
  EXPECT_THROW(load_embeddings(dir / "unknown.jsonl", ids(1)), DataError);
}

TEST(EmbeddingJsonl, CrossFormatRoundTrip) {
  TempDir dir;
  std::vector<float> v = oracle::blob_embeddings(50, 8, 3, 0.3, 4);
  const EmbeddingMatrix m(ids(50), 8, v);
  {
    std::ofstream out(dir / "e.jsonl", std::ios::binary);
    write_embeddings_jsonl(out, m);
  }
  const auto from_jsonl = load_embeddings(dir / "e.jsonl", ids(50));
  EXPECT_EQ(from_jsonl, m);
  write_embeddings_binary(dir / "e.bin", from_jsonl);
  EXPECT_EQ(load_embeddings(dir / "e.bin", ids(50)), m);
  EXPECT_EQ(sniff_embedding_format(dir / "e.bin"), EmbeddingFormat::binary);
  EXPECT_EQ(sniff_embedding_format(dir / "e.jsonl"), EmbeddingFormat::jsonl);
}
