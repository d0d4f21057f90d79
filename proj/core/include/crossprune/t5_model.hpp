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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crossprune/model_artifact.hpp"
#include "crossprune/tokenizer.hpp"

namespace crossprune {

struct T5RunOptions {
  bool cross_attention = true;
  bool encoder_self_attention = false;
  bool logits = false;
};

/// Attention probabilities of one forward pass. Each layer entry is a
/// row-major [heads, query_len, key_len] block.
struct T5Outputs {
  std::size_t source_length = 0;
  std::size_t target_length = 0;
  std::size_t heads = 0;
  std::vector<std::vector<float>> cross_attention;         // per decoder layer, key_len = source_length
  std::vector<std::vector<float>> encoder_self_attention;  // per encoder layer, query/key = source_length
  std::vector<float> logits;                               // [target_length, vocab]
  std::size_t vocab = 0;

  float cross(std::size_t layer, std::size_t head, std::size_t step, std::size_t src) const {
    return cross_attention[layer][(head * target_length + step) * source_length + src];
  }
  float encoder_self(std::size_t layer, std::size_t head, std::size_t query, std::size_t key) const {
    return encoder_self_attention[layer][(head * source_length + query) * source_length + key];
  }
};

/// T5 encoder-decoder forward pass (HuggingFace tensor layout, relu or
/// gated-gelu feed-forward). Weights are immutable after loading; `run` is
/// const and safe to call from several threads at once.
class T5Model {
 public:
  ~T5Model();
  T5Model(const T5Model&) = delete;
  T5Model& operator=(const T5Model&) = delete;

  /// Loads manifest, weights and tokenizer from an artifact directory.
  static std::shared_ptr<const T5Model> load(const std::filesystem::path& dir);

  const ModelManifest& manifest() const noexcept;
  const UnigramTokenizer& tokenizer() const noexcept;

  /// Runs the encoder over `encoder_ids` and the decoder over `decoder_ids`
  /// (teacher forcing, no sampling).
  T5Outputs run(std::span<const std::int64_t> encoder_ids, std::span<const std::int64_t> decoder_ids,
                const T5RunOptions& options = {}) const;

  /// Tensor names and shapes the manifest implies (lm_head is optional and
  /// not listed).
  static std::vector<std::pair<std::string, std::vector<std::int64_t>>> expected_tensors(const ModelManifest& m);

  /// T5 relative-position bucket for key_pos - query_pos.
  static int relative_position_bucket(int relative_position, bool bidirectional, int num_buckets, int max_distance);

 private:
  struct Impl;
  explicit T5Model(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace crossprune
