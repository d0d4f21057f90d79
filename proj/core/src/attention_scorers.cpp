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

#include <algorithm>
#include <cmath>

#include "crossprune/error.hpp"
#include "crossprune/scorer.hpp"

namespace crossprune {

namespace {

struct EncodedInput {
  std::vector<std::int64_t> ids;  // context tokens, query tokens, end marker
  std::vector<TokenSpan> context_tokens;
  std::size_t query_tokens = 0;
};

// Tokenizes "context query" in one pass; tokens ending inside the context
// belong to it. Tokens never span whitespace, so the split is exact.
EncodedInput encode(const T5Model& model, const AttentionRequest& request, const std::string& scorer) {
  if (request.context.empty() || request.query.empty())
    throw InvalidRecordError(scorer + ": context and query must be non-empty");
  const std::string joined = request.context + " " + request.query;
  const auto tokens = model.tokenizer().tokenize(joined);

  EncodedInput enc;
  for (const auto& t : tokens) {
    enc.ids.push_back(t.token_id);
    if (t.char_end <= request.context.size()) enc.context_tokens.push_back(t);
  }
  enc.query_tokens = tokens.size() - enc.context_tokens.size();
  enc.ids.push_back(model.manifest().eos_token_id);
  if (enc.context_tokens.empty()) throw ScorerError(scorer + ": context produced no tokens");

  const auto limit = static_cast<std::size_t>(model.manifest().max_length);
  if (enc.ids.size() > limit)
    throw WindowOverflowError(enc.ids.size(), limit,
                              scorer + ": input needs " + std::to_string(enc.ids.size()) +
                                  " tokens but the model window is " + std::to_string(limit) +
                                  "; use a chunked strategy (chunk1 or chunk2)");
  return enc;
}

std::size_t capacity_with_query(const T5Model& model, std::string_view query) {
  const auto q = query.empty() ? 0 : model.tokenizer().tokenize(query).size();
  const auto limit = static_cast<std::size_t>(model.manifest().max_length);
  return limit > q + 1 ? limit - q - 1 : 0;
}

}  // namespace

CrossAttentionScorer::CrossAttentionScorer(std::shared_ptr<const T5Model> model, LayerSelect layers, Mode mode)
    : model_(std::move(model)), layers_(std::move(layers)), mode_(mode) {
  if (!model_) throw ScorerNotConfiguredError(name() + ": no model");
}

std::string CrossAttentionScorer::name() const {
  return mode_ == Mode::FirstStep ? "cross-first" : "cross-total";
}

std::optional<std::size_t> CrossAttentionScorer::context_capacity(std::string_view query) const {
  return capacity_with_query(*model_, query);
}

RawScoreVector CrossAttentionScorer::score(const AttentionRequest& request) {
  const auto enc = encode(*model_, request, name());
  const auto& m = model_->manifest();

  std::vector<std::int64_t> decoder_ids{m.start_token_id};
  if (mode_ == Mode::TeacherForced) {
    if (!request.target || request.target->find_first_not_of(" \t\n\r\v\f") == std::string::npos)
      throw ScorerError("cross-total: needs a non-empty gold answer for teacher forcing");
    const auto target = model_->tokenizer().tokenize(*request.target);
    for (std::size_t i = 0; i + 1 < target.size(); ++i) decoder_ids.push_back(target[i].token_id);
  }

  const auto out = model_->run(enc.ids, decoder_ids, T5RunOptions{.cross_attention = true});
  const std::size_t n = enc.context_tokens.size();
  const std::size_t steps = out.target_length;
  std::vector<std::vector<double>> per_layer(out.cross_attention.size(), std::vector<double>(n, 0.0));
  for (std::size_t l = 0; l < per_layer.size(); ++l) {
    for (std::size_t h = 0; h < out.heads; ++h)
      for (std::size_t s = 0; s < steps; ++s)
        for (std::size_t i = 0; i < n; ++i) per_layer[l][i] += out.cross(l, h, s, i);
    for (double& v : per_layer[l]) v /= static_cast<double>(out.heads * steps);
  }

  RawScoreVector result;
  result.unit = "attention";
  result.scores = reduce_layers(per_layer, layers_);
  result.token_spans = enc.context_tokens;
  return result;
}

SelfAttentionScorer::SelfAttentionScorer(std::shared_ptr<const T5Model> model, LayerSelect layers)
    : model_(std::move(model)), layers_(std::move(layers)) {
  if (!model_) throw ScorerNotConfiguredError("self-attn: no model");
}

std::optional<std::size_t> SelfAttentionScorer::context_capacity(std::string_view query) const {
  return capacity_with_query(*model_, query);
}

RawScoreVector SelfAttentionScorer::score(const AttentionRequest& request) {
  const auto enc = encode(*model_, request, name());
  if (enc.query_tokens == 0) throw ScorerError("self-attn: query produced no tokens");

  const std::vector<std::int64_t> decoder_ids{model_->manifest().start_token_id};
  const auto out = model_->run(enc.ids, decoder_ids,
                               T5RunOptions{.cross_attention = false, .encoder_self_attention = true});
  const std::size_t n = enc.context_tokens.size();
  const std::size_t q_begin = n;
  const std::size_t q_end = n + enc.query_tokens;
  std::vector<std::vector<double>> per_layer(out.encoder_self_attention.size(), std::vector<double>(n, 0.0));
  for (std::size_t l = 0; l < per_layer.size(); ++l) {
    for (std::size_t h = 0; h < out.heads; ++h)
      for (std::size_t q = q_begin; q < q_end; ++q)
        for (std::size_t i = 0; i < n; ++i) per_layer[l][i] += out.encoder_self(l, h, q, i);
    for (double& v : per_layer[l]) v /= static_cast<double>(out.heads * enc.query_tokens);
  }

  RawScoreVector result;
  result.unit = "attention";
  result.scores = reduce_layers(per_layer, layers_);
  result.token_spans = enc.context_tokens;
  return result;
}

SelfInformationScorer::SelfInformationScorer(std::shared_ptr<const T5Model> model) : model_(std::move(model)) {
  if (!model_) throw ScorerNotConfiguredError("self-info: no model");
}

std::optional<std::size_t> SelfInformationScorer::context_capacity(std::string_view) const {
  return static_cast<std::size_t>(model_->manifest().max_length);
}

RawScoreVector SelfInformationScorer::score(const AttentionRequest& request) {
  if (request.context.empty()) throw InvalidRecordError("self-info: context must be non-empty");
  const auto& m = model_->manifest();
  const auto tokens = model_->tokenizer().tokenize(request.context);
  const auto limit = static_cast<std::size_t>(m.max_length);
  if (tokens.size() > limit)
    throw WindowOverflowError(tokens.size(), limit,
                              "self-info: context needs " + std::to_string(tokens.size()) +
                                  " tokens but the model window is " + std::to_string(limit) +
                                  "; use a chunked strategy (chunk1 or chunk2)");

  const std::vector<std::int64_t> encoder_ids{m.eos_token_id};
  std::vector<std::int64_t> decoder_ids{m.start_token_id};
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) decoder_ids.push_back(tokens[i].token_id);

  const auto out = model_->run(encoder_ids, decoder_ids,
                               T5RunOptions{.cross_attention = false, .encoder_self_attention = false, .logits = true});
  RawScoreVector result;
  result.unit = "bits";
  result.token_spans = tokens;
  result.scores.reserve(tokens.size());
  for (std::size_t s = 0; s < tokens.size(); ++s) {
    const float* row = out.logits.data() + s * out.vocab;
    double max_logit = row[0];
    for (std::size_t v = 1; v < out.vocab; ++v) max_logit = std::max(max_logit, static_cast<double>(row[v]));
    double sum = 0.0;
    for (std::size_t v = 0; v < out.vocab; ++v) sum += std::exp(static_cast<double>(row[v]) - max_logit);
    const double log_p = static_cast<double>(row[tokens[s].token_id]) - max_logit - std::log(sum);
    result.scores.push_back(-log_p / std::log(2.0));
  }
  return result;
}

}  // namespace crossprune
