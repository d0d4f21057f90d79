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

// Model artifact directory:
//
//   manifest.json       model hyperparameters, start token, window, checksums
//   model.safetensors   encoder-decoder weights (HuggingFace T5 tensor names)
//   tokenizer.json      unigram tokenizer definition
//
// File names inside the directory can be overridden by the manifest "files" map.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace crossprune {

struct ModelManifest {
  int schema_version = 1;
  std::string model_name;
  std::string architecture = "t5";
  int layer_count = 0;          // decoder layers (cross-attention layers)
  int encoder_layer_count = 0;  // defaults to layer_count
  int head_count = 0;
  int d_model = 0;
  int d_kv = 0;
  int d_ff = 0;
  int vocab_size = 0;
  int relative_attention_num_buckets = 32;
  int relative_attention_max_distance = 128;
  std::string feed_forward_proj = "relu";  // "relu" or "gated-gelu"
  double layer_norm_epsilon = 1e-6;
  bool tie_word_embeddings = true;    // lm head shares the embedding when the weights lack lm_head.weight
  bool scale_decoder_outputs = true;  // multiply decoder output by d_model^-0.5 before the lm head
  std::int64_t start_token_id = 0;
  std::int64_t eos_token_id = 1;
  int max_length = 512;  // encoder window in tokens, including the end marker
  std::string weights_file = "model.safetensors";
  std::string tokenizer_file = "tokenizer.json";
  std::map<std::string, std::string> checksums;  // file name -> "sha256:<hex>"
};

/// Parses `<dir>/manifest.json`. Throws ArtifactError on missing or invalid fields.
ModelManifest load_manifest(const std::filesystem::path& dir);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct ArtifactCheck {
  bool ok = true;
  std::vector<std::string> problems;
  std::vector<std::string> notes;
};

/// Validates an artifact directory against its manifest: files present,
/// checksums match, every expected tensor exists with the shape implied by
/// the manifest, and the tokenizer loads with a matching vocabulary size.
ArtifactCheck check_artifact(const std::filesystem::path& dir);

}  // namespace crossprune
