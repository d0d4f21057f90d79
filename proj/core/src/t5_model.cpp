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

#include "crossprune/t5_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "crossprune/error.hpp"
#include "crossprune/safetensors.hpp"

namespace crossprune {

namespace {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<float, 1, Eigen::Dynamic>;

Matrix load_matrix(const SafetensorsFile& f, const std::string& name, std::int64_t rows, std::int64_t cols) {
  const auto data = f.load_f32(name, {rows, cols});
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

RowVector load_vector(const SafetensorsFile& f, const std::string& name, std::int64_t size) {
  const auto data = f.load_f32(name, {size});
  return Eigen::Map<const RowVector>(data.data(), size);
}

struct Attention {
  Matrix q, k, v, o;   // HF Linear layout [out, in]
  Matrix relative_bias;  // [buckets, heads]; empty unless this layer owns the bias
};

struct FeedForward {
  Matrix wi0, wi1, wo;  // wi1 empty for the relu variant
};

struct EncoderBlock {
  RowVector attn_norm, ff_norm;
  Attention self_attn;
  FeedForward ff;
};

struct DecoderBlock {
  RowVector self_norm, cross_norm, ff_norm;
  Attention self_attn, cross_attn;
  FeedForward ff;
};

float gelu_new(float x) {
  constexpr float kC = 0.7978845608028654f;  // sqrt(2/pi)
  return 0.5f * x * (1.0f + std::tanh(kC * (x + 0.044715f * x * x * x)));
}

}  // namespace

struct T5Model::Impl {
  ModelManifest manifest;
  UnigramTokenizer tokenizer;
  Matrix embedding;  // [vocab, d_model]
  Matrix lm_head;    // [vocab, d_model]; empty when tied
  std::vector<EncoderBlock> encoder;
  std::vector<DecoderBlock> decoder;
  RowVector encoder_final_norm, decoder_final_norm;
  bool gated = false;

  Matrix rms_norm(const Matrix& x, const RowVector& weight) const {
    Matrix out(x.rows(), x.cols());
    const float eps = static_cast<float>(manifest.layer_norm_epsilon);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const float variance = x.row(r).squaredNorm() / static_cast<float>(x.cols());
      out.row(r) = x.row(r) * (1.0f / std::sqrt(variance + eps));
      out.row(r) = out.row(r).cwiseProduct(weight);
    }
    return out;
  }

  Matrix feed_forward(const Matrix& x, const FeedForward& ff) const {
    Matrix h = x * ff.wi0.transpose();
    if (gated) {
      h = h.unaryExpr([](float v) { return gelu_new(v); });
      h = h.cwiseProduct(x * ff.wi1.transpose());
    } else {
      h = h.cwiseMax(0.0f);
    }
    return h * ff.wo.transpose();
  }

  /// [heads][query, key] additive position bias.
  std::vector<Matrix> position_bias(const Matrix& table, Eigen::Index query_len, Eigen::Index key_len,
                                    bool bidirectional) const {
    const int heads = manifest.head_count;
    std::vector<Matrix> bias(heads, Matrix(query_len, key_len));
    for (Eigen::Index qi = 0; qi < query_len; ++qi)
      for (Eigen::Index ki = 0; ki < key_len; ++ki) {
        const int bucket = relative_position_bucket(static_cast<int>(ki - qi), bidirectional,
                                                    manifest.relative_attention_num_buckets,
                                                    manifest.relative_attention_max_distance);
        for (int h = 0; h < heads; ++h) bias[h](qi, ki) = table(bucket, h);
      }
    return bias;
  }

  /// Multi-head attention; writes probabilities to `probs` ([heads, q, k]) when non-null.
  Matrix attention(const Matrix& hidden, const Matrix& kv_source, const Attention& attn, const std::vector<Matrix>* bias,
                   bool causal, std::vector<float>* probs) const {
    const int heads = manifest.head_count;
    const int d_kv = manifest.d_kv;
    const Matrix q = hidden * attn.q.transpose();
    const Matrix k = kv_source * attn.k.transpose();
    const Matrix v = kv_source * attn.v.transpose();
    const Eigen::Index ql = hidden.rows();
    const Eigen::Index kl = kv_source.rows();
    Matrix context(ql, static_cast<Eigen::Index>(heads) * d_kv);
    if (probs) probs->assign(static_cast<std::size_t>(heads * ql * kl), 0.0f);

    for (int h = 0; h < heads; ++h) {
      const auto qh = q.middleCols(h * d_kv, d_kv);
      const auto kh = k.middleCols(h * d_kv, d_kv);
      const auto vh = v.middleCols(h * d_kv, d_kv);
      Matrix scores = qh * kh.transpose();
      if (bias) scores += (*bias)[h];
      for (Eigen::Index r = 0; r < ql; ++r) {
        if (causal)
          for (Eigen::Index c = r + 1; c < kl; ++c) scores(r, c) = -std::numeric_limits<float>::infinity();
        const float max = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - max).exp();
        scores.row(r) /= scores.row(r).sum();
      }
      if (probs)
        std::copy(scores.data(), scores.data() + ql * kl, probs->data() + static_cast<std::ptrdiff_t>(h * ql * kl));
      context.middleCols(h * d_kv, d_kv) = scores * vh;
    }
    return context * attn.o.transpose();
  }

  Matrix embed(std::span<const std::int64_t> ids) const {
    Matrix x(static_cast<Eigen::Index>(ids.size()), embedding.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= embedding.rows())
        throw ScorerError("token id " + std::to_string(ids[i]) + " outside the embedding table");
      x.row(static_cast<Eigen::Index>(i)) = embedding.row(ids[i]);
    }
    return x;
  }
};

T5Model::T5Model(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
T5Model::~T5Model() = default;

const ModelManifest& T5Model::manifest() const noexcept { return impl_->manifest; }
const UnigramTokenizer& T5Model::tokenizer() const noexcept { return impl_->tokenizer; }

int T5Model::relative_position_bucket(int relative_position, bool bidirectional, int num_buckets, int max_distance) {
  int bucket = 0;
  if (bidirectional) {
    num_buckets /= 2;
    if (relative_position > 0) bucket += num_buckets;
    relative_position = std::abs(relative_position);
  } else {
    relative_position = -std::min(relative_position, 0);
  }
  const int max_exact = num_buckets / 2;
  if (relative_position < max_exact) return bucket + relative_position;
  // float32 arithmetic mirrors the reference implementation's truncation points
  const float scaled = std::log(static_cast<float>(relative_position) / static_cast<float>(max_exact)) /
                       static_cast<float>(std::log(static_cast<double>(max_distance) / max_exact)) *
                       static_cast<float>(num_buckets - max_exact);
  const int large = std::min(max_exact + static_cast<int>(scaled), num_buckets - 1);
  return bucket + large;
}

std::vector<std::pair<std::string, std::vector<std::int64_t>>> T5Model::expected_tensors(const ModelManifest& m) {
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> out;
  const std::int64_t d = m.d_model, inner = static_cast<std::int64_t>(m.head_count) * m.d_kv, ff = m.d_ff;
  const bool gated = m.feed_forward_proj == "gated-gelu";
  out.push_back({"shared.weight", {m.vocab_size, d}});
  auto attention = [&](const std::string& p, bool with_bias) {
    out.push_back({p + ".q.weight", {inner, d}});
    out.push_back({p + ".k.weight", {inner, d}});
    out.push_back({p + ".v.weight", {inner, d}});
    out.push_back({p + ".o.weight", {d, inner}});
    if (with_bias) out.push_back({p + ".relative_attention_bias.weight", {m.relative_attention_num_buckets, m.head_count}});
  };
  auto dense = [&](const std::string& p) {
    if (gated) {
      out.push_back({p + ".wi_0.weight", {ff, d}});
      out.push_back({p + ".wi_1.weight", {ff, d}});
    } else {
      out.push_back({p + ".wi.weight", {ff, d}});
    }
    out.push_back({p + ".wo.weight", {d, ff}});
  };
  for (int i = 0; i < m.encoder_layer_count; ++i) {
    const std::string b = "encoder.block." + std::to_string(i);
    attention(b + ".layer.0.SelfAttention", i == 0);
    out.push_back({b + ".layer.0.layer_norm.weight", {d}});
    dense(b + ".layer.1.DenseReluDense");
    out.push_back({b + ".layer.1.layer_norm.weight", {d}});
  }
  out.push_back({"encoder.final_layer_norm.weight", {d}});
  for (int i = 0; i < m.layer_count; ++i) {
    const std::string b = "decoder.block." + std::to_string(i);
    attention(b + ".layer.0.SelfAttention", i == 0);
    out.push_back({b + ".layer.0.layer_norm.weight", {d}});
    attention(b + ".layer.1.EncDecAttention", false);
    out.push_back({b + ".layer.1.layer_norm.weight", {d}});
    dense(b + ".layer.2.DenseReluDense");
    out.push_back({b + ".layer.2.layer_norm.weight", {d}});
  }
  out.push_back({"decoder.final_layer_norm.weight", {d}});
  return out;
}

std::shared_ptr<const T5Model> T5Model::load(const std::filesystem::path& dir) {
  auto manifest = load_manifest(dir);
  auto tokenizer = UnigramTokenizer::from_file(dir / manifest.tokenizer_file);
  auto impl = std::make_unique<Impl>(Impl{std::move(manifest), std::move(tokenizer), {}, {}, {}, {}, {}, {}, false});
  const auto& m = impl->manifest;
  impl->gated = m.feed_forward_proj == "gated-gelu";
  const auto f = SafetensorsFile::open(dir / m.weights_file);
  const std::int64_t d = m.d_model, inner = static_cast<std::int64_t>(m.head_count) * m.d_kv, ff = m.d_ff;

  impl->embedding = load_matrix(f, "shared.weight", m.vocab_size, d);
  if (f.contains("lm_head.weight")) impl->lm_head = load_matrix(f, "lm_head.weight", m.vocab_size, d);
  else if (!m.tie_word_embeddings) throw ArtifactError("weights lack lm_head.weight and the manifest does not tie embeddings");

  auto attention = [&](const std::string& p, bool with_bias) {
    Attention a;
    a.q = load_matrix(f, p + ".q.weight", inner, d);
    a.k = load_matrix(f, p + ".k.weight", inner, d);
    a.v = load_matrix(f, p + ".v.weight", inner, d);
    a.o = load_matrix(f, p + ".o.weight", d, inner);
    if (with_bias)
      a.relative_bias = load_matrix(f, p + ".relative_attention_bias.weight", m.relative_attention_num_buckets, m.head_count);
    return a;
  };
  auto dense = [&](const std::string& p) {
    FeedForward out;
    if (impl->gated) {
      out.wi0 = load_matrix(f, p + ".wi_0.weight", ff, d);
      out.wi1 = load_matrix(f, p + ".wi_1.weight", ff, d);
    } else {
      out.wi0 = load_matrix(f, p + ".wi.weight", ff, d);
    }
    out.wo = load_matrix(f, p + ".wo.weight", d, ff);
    return out;
  };

  for (int i = 0; i < m.encoder_layer_count; ++i) {
    const std::string b = "encoder.block." + std::to_string(i);
    EncoderBlock blk;
    blk.self_attn = attention(b + ".layer.0.SelfAttention", i == 0);
    blk.attn_norm = load_vector(f, b + ".layer.0.layer_norm.weight", d);
    blk.ff = dense(b + ".layer.1.DenseReluDense");
    blk.ff_norm = load_vector(f, b + ".layer.1.layer_norm.weight", d);
    impl->encoder.push_back(std::move(blk));
  }
  impl->encoder_final_norm = load_vector(f, "encoder.final_layer_norm.weight", d);
  for (int i = 0; i < m.layer_count; ++i) {
    const std::string b = "decoder.block." + std::to_string(i);
    DecoderBlock blk;
    blk.self_attn = attention(b + ".layer.0.SelfAttention", i == 0);
    blk.self_norm = load_vector(f, b + ".layer.0.layer_norm.weight", d);
    blk.cross_attn = attention(b + ".layer.1.EncDecAttention", false);
    blk.cross_norm = load_vector(f, b + ".layer.1.layer_norm.weight", d);
    blk.ff = dense(b + ".layer.2.DenseReluDense");
    blk.ff_norm = load_vector(f, b + ".layer.2.layer_norm.weight", d);
    impl->decoder.push_back(std::move(blk));
  }
  impl->decoder_final_norm = load_vector(f, "decoder.final_layer_norm.weight", d);
  return std::shared_ptr<const T5Model>(new T5Model(std::move(impl)));
}

T5Outputs T5Model::run(std::span<const std::int64_t> encoder_ids, std::span<const std::int64_t> decoder_ids,
                       const T5RunOptions& options) const {
  if (encoder_ids.empty() || decoder_ids.empty()) throw ScorerError("encoder and decoder inputs must be non-empty");
  const auto& m = impl_->manifest;
  if (encoder_ids.size() > static_cast<std::size_t>(m.max_length))
    throw WindowOverflowError(encoder_ids.size(), static_cast<std::size_t>(m.max_length),
                              "encoder input of " + std::to_string(encoder_ids.size()) +
                                  " tokens exceeds the model window of " + std::to_string(m.max_length));

  T5Outputs out;
  out.source_length = encoder_ids.size();
  out.target_length = decoder_ids.size();
  out.heads = static_cast<std::size_t>(m.head_count);
  const auto src_len = static_cast<Eigen::Index>(encoder_ids.size());
  const auto tgt_len = static_cast<Eigen::Index>(decoder_ids.size());

  // Encoder
  Matrix x = impl_->embed(encoder_ids);
  const auto enc_bias = impl_->position_bias(impl_->encoder.front().self_attn.relative_bias, src_len, src_len, true);
  if (options.encoder_self_attention) out.encoder_self_attention.resize(impl_->encoder.size());
  for (std::size_t i = 0; i < impl_->encoder.size(); ++i) {
    const auto& blk = impl_->encoder[i];
    const Matrix normed = impl_->rms_norm(x, blk.attn_norm);
    x += impl_->attention(normed, normed, blk.self_attn, &enc_bias, false,
                          options.encoder_self_attention ? &out.encoder_self_attention[i] : nullptr);
    x += impl_->feed_forward(impl_->rms_norm(x, blk.ff_norm), blk.ff);
  }
  const Matrix encoded = impl_->rms_norm(x, impl_->encoder_final_norm);

  // Decoder
  Matrix y = impl_->embed(decoder_ids);
  const auto dec_bias = impl_->position_bias(impl_->decoder.front().self_attn.relative_bias, tgt_len, tgt_len, false);
  if (options.cross_attention) out.cross_attention.resize(impl_->decoder.size());
  for (std::size_t i = 0; i < impl_->decoder.size(); ++i) {
    const auto& blk = impl_->decoder[i];
    const Matrix normed = impl_->rms_norm(y, blk.self_norm);
    y += impl_->attention(normed, normed, blk.self_attn, &dec_bias, true, nullptr);
    y += impl_->attention(impl_->rms_norm(y, blk.cross_norm), encoded, blk.cross_attn, nullptr, false,
                          options.cross_attention ? &out.cross_attention[i] : nullptr);
    y += impl_->feed_forward(impl_->rms_norm(y, blk.ff_norm), blk.ff);
  }

  if (options.logits) {
    Matrix h = impl_->rms_norm(y, impl_->decoder_final_norm);
    if (m.scale_decoder_outputs) h *= 1.0f / std::sqrt(static_cast<float>(m.d_model));
    const Matrix& head = impl_->lm_head.size() ? impl_->lm_head : impl_->embedding;
    const Matrix logits = h * head.transpose();
    out.vocab = static_cast<std::size_t>(logits.cols());
    out.logits.assign(logits.data(), logits.data() + logits.size());
  }
  return out;
}

}  // namespace crossprune
