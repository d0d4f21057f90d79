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

#include "crossprune/model_artifact.hpp"

#include <array>
#include <fstream>
#include <memory>

#include <json.hpp>
#include <openssl/evp.h>

#include "crossprune/error.hpp"
#include "crossprune/safetensors.hpp"
#include "crossprune/t5_model.hpp"
#include "crossprune/tokenizer.hpp"

namespace crossprune {

ModelManifest load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArtifactError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  ModelManifest m;
  try {
    m.schema_version = j.value("schema_version", 1);
    m.model_name = j.value("model_name", std::string());
    m.architecture = j.value("architecture", m.architecture);
    m.layer_count = j.at("layer_count").get<int>();
    m.encoder_layer_count = j.value("encoder_layer_count", m.layer_count);
    m.head_count = j.at("head_count").get<int>();
    m.d_model = j.at("d_model").get<int>();
    m.d_kv = j.at("d_kv").get<int>();
    m.d_ff = j.at("d_ff").get<int>();
    m.vocab_size = j.at("vocab_size").get<int>();
    m.relative_attention_num_buckets = j.value("relative_attention_num_buckets", m.relative_attention_num_buckets);
    m.relative_attention_max_distance = j.value("relative_attention_max_distance", m.relative_attention_max_distance);
    m.feed_forward_proj = j.value("feed_forward_proj", m.feed_forward_proj);
    m.layer_norm_epsilon = j.value("layer_norm_epsilon", m.layer_norm_epsilon);
    m.tie_word_embeddings = j.value("tie_word_embeddings", m.tie_word_embeddings);
    m.scale_decoder_outputs = j.value("scale_decoder_outputs", m.tie_word_embeddings);
    m.start_token_id = j.at("start_token_id").get<std::int64_t>();
    m.eos_token_id = j.value("eos_token_id", m.eos_token_id);
    m.max_length = j.at("max_length").get<int>();
    if (j.contains("files")) {
      m.weights_file = j.at("files").value("weights", m.weights_file);
      m.tokenizer_file = j.at("files").value("tokenizer", m.tokenizer_file);
    }
    if (j.contains("checksums")) m.checksums = j.at("checksums").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("manifest '" + path.string() + "': " + e.what());
  }
  if (m.architecture != "t5") throw ArtifactError("unsupported architecture '" + m.architecture + "' (expected t5)");
  if (m.layer_count <= 0 || m.encoder_layer_count <= 0 || m.head_count <= 0 || m.d_model <= 0 || m.d_kv <= 0 ||
      m.d_ff <= 0 || m.vocab_size <= 0 || m.max_length <= 1)
    throw ArtifactError("manifest '" + path.string() + "': dimensions and counts must be positive");
  if (m.feed_forward_proj != "relu" && m.feed_forward_proj != "gated-gelu")
    throw ArtifactError("unsupported feed_forward_proj '" + m.feed_forward_proj + "'");
  return m;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialisation failed");
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

ArtifactCheck check_artifact(const std::filesystem::path& dir) {
  ArtifactCheck report;
  auto fail = [&](std::string msg) {
    report.ok = false;
    report.problems.push_back(std::move(msg));
  };

  ModelManifest m;
  try {
    m = load_manifest(dir);
  } catch (const Error& e) {
    fail(e.what());
    return report;
  }
  report.notes.push_back("model '" + m.model_name + "': " + std::to_string(m.encoder_layer_count) + " encoder / " +
                         std::to_string(m.layer_count) + " decoder layers, " + std::to_string(m.head_count) +
                         " heads, window " + std::to_string(m.max_length));

  for (const auto& file : {m.weights_file, m.tokenizer_file})
    if (!std::filesystem::exists(dir / file)) fail("missing artifact file '" + file + "'");
  if (!report.ok) return report;

  if (m.checksums.empty()) report.notes.push_back("manifest lists no checksums");
  for (const auto& [file, expected] : m.checksums) {
    if (!std::filesystem::exists(dir / file)) {
      fail("checksummed file '" + file + "' is missing");
      continue;
    }
    const std::string want = expected.starts_with("sha256:") ? expected.substr(7) : expected;
    const std::string got = sha256_file(dir / file);
    if (got != want) fail("checksum mismatch for '" + file + "': manifest " + want + ", file " + got);
    else report.notes.push_back("checksum ok: " + file);
  }

  try {
    const auto weights = SafetensorsFile::open(dir / m.weights_file);
    for (const auto& [name, shape] : T5Model::expected_tensors(m)) {
      if (!weights.contains(name)) {
        fail("weights lack tensor '" + name + "'");
        continue;
      }
      if (weights.info(name).shape != shape) fail("tensor '" + name + "' has a shape inconsistent with the manifest");
    }
  } catch (const Error& e) {
    fail(e.what());
  }

  try {
    const auto tok = UnigramTokenizer::from_file(dir / m.tokenizer_file);
    if (tok.vocab_size() > static_cast<std::size_t>(m.vocab_size))
      fail("tokenizer vocabulary (" + std::to_string(tok.vocab_size()) + ") exceeds the embedding rows (" +
           std::to_string(m.vocab_size) + ")");
    if (tok.eos_id() != m.eos_token_id) fail("tokenizer end marker id differs from manifest eos_token_id");
  } catch (const Error& e) {
    fail(e.what());
  }
  return report;
}

}  // namespace crossprune
