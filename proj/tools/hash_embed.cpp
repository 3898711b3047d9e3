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


// Writes deterministic bag-of-words embeddings for a sentence jsonl file.
// Each token maps to a fixed pseudo-random direction; a sentence vector is
// the normalized sum of its tokens' directions. Useful for demos and smoke
// tests when no neural embedding model is at hand.

#include <cmath>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corpuslens/corpuslens.hpp"

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void add_direction(std::string_view key, std::vector<double>& acc) {
  std::mt19937_64 rng(fnv1a(key));
  for (auto& v : acc) v += corpuslens::detail::uniform01(rng) * 2.0 - 1.0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hashed bag-of-words sentence embeddings in CEMB format", "corpuslens-hash-embed"};
  std::string input, output;
  std::size_t dim = 32;
  app.add_option("input", input, "Sentence jsonl written by `corpuslens ingest`")->required();
  app.add_option("output", output, "Output CEMB file")->required();
  app.add_option("--dim", dim, "Embedding dimension")->check(CLI::Range(2, 4096));
  CLI11_PARSE(app, argc, argv);

  try {
    const auto sentences = corpuslens::read_sentences_jsonl(input);
    std::vector<float> values;
    values.reserve(sentences.size() * dim);
    for (const auto& s : sentences) {
      std::vector<double> acc(dim, 0.0);
      const auto tokens = corpuslens::tokenize(s.text);
      for (const auto& t : tokens) add_direction(t, acc);
      if (tokens.empty()) add_direction(s.sentence_id, acc);
      double norm = 0.0;
      for (double v : acc) norm += v * v;
      norm = std::sqrt(norm);
      for (double v : acc) values.push_back(static_cast<float>(v / norm));
    }
    std::vector<std::string> ids;
    for (const auto& s : sentences) ids.push_back(s.sentence_id);
    corpuslens::write_embeddings_binary(output, corpuslens::EmbeddingMatrix(ids, dim, values));
  } catch (const corpuslens::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
