// Copyright 2026 The crossprune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Domain types shared by every module: dataset records, compression
// configuration and the compression result.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace crossprune {

/// One dataset example: the context to compress, the query, and gold answers.
struct QARecord {
  std::string id;
  std::string context;
  std::string query;
  std::vector<std::string> answers;  // may be empty for compression-only use

  friend bool operator==(const QARecord&, const QARecord&) = default;
};

/// Throws InvalidRecordError when context or query is empty.
void validate_record(const QARecord& record);

enum class Strategy { Single, Chunked1, Chunked2 };

enum class LayerMode { AllLayers, LastLayer, Indices };

struct LayerSelect {
  LayerMode mode = LayerMode::AllLayers;
  std::vector<int> indices;  // only used with LayerMode::Indices

  friend bool operator==(const LayerSelect&, const LayerSelect&) = default;
};

/// How Strategy 2 merges raw chunk scores before selection.
enum class ChunkMerge {
  GlobalSoftmax,    // one softmax over the concatenated raw scores
  PerChunkSoftmax,  // softmax inside each chunk, rescaled by the chunk count
};

struct CompressionConfig {
  double tau = 0.5;    // retained fraction of words, (0, 1]
  double sigma = 1.0;  // Gaussian std in word units; 0 disables smoothing
  int window_k = 3;    // kernel half-width K
  int chunk_size = 512;
  Strategy strategy = Strategy::Single;
  LayerSelect layer_select;
  int min_retained = 1;
  ChunkMerge chunk_merge = ChunkMerge::GlobalSoftmax;

  friend bool operator==(const CompressionConfig&, const CompressionConfig&) = default;
};

/// Tie-break policy is fixed; it is serialized for provenance only.
inline constexpr std::string_view kTieBreakPolicy = "earlier-position-wins";

/// Returns `cfg` unchanged when every invariant holds, otherwise throws
/// ConfigError naming the offending field.
CompressionConfig validate_config(const CompressionConfig& cfg);

/// max(min_retained, round_half_up(tau * n_words)), capped at n_words.
std::size_t target_retained_count(std::size_t n_words, double tau, int min_retained);

std::string to_string(Strategy s);
std::string to_string(ChunkMerge m);
Strategy parse_strategy(std::string_view text);
ChunkMerge parse_chunk_merge(std::string_view text);
LayerSelect parse_layer_select(std::string_view text);  // "all", "last" or "0,2,5"

enum class ScoreStage { RawToken, NormalizedToken, Word, SmoothedWord };

std::string to_string(ScoreStage stage);

struct ScoreVector {
  std::vector<double> values;
  ScoreStage stage = ScoreStage::RawToken;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;
};

/// What produced a result, so experiments stay comparable.
struct Provenance {
  CompressionConfig config;
  std::string scorer;
  std::string input_format = "context + ' ' + query";

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct CompressionResult {
  std::string record_id;
  std::string compressed_text;
  std::vector<std::size_t> retained_word_indices;  // strictly increasing
  ScoreVector word_scores_raw;                     // stage Word
  ScoreVector word_scores_smoothed;                // stage SmoothedWord
  std::size_t word_count = 0;
  double achieved_ratio = 0.0;                     // retained / word_count
  Provenance provenance;

  friend bool operator==(const CompressionResult&, const CompressionResult&) = default;
};

// JSON mirrors the field names above. Missing config fields take defaults.
nlohmann::json to_json(const CompressionConfig& cfg);
CompressionConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CompressionResult& result);
CompressionResult result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QARecord& record);

/// Reads a JSON config file; every field is optional.
CompressionConfig load_config_file(const std::string& path);

}  // namespace crossprune
