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

#include "crossprune/scorer.hpp"

#include <cmath>
#include <random>

#include "crossprune/error.hpp"

namespace crossprune {

namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::CrossAttnFirst: return "cross-first";
    case ScorerKind::CrossAttnTotal: return "cross-total";
    case ScorerKind::SelfAttention: return "self-attn";
    case ScorerKind::SelfInformation: return "self-info";
    case ScorerKind::Mock: return "mock";
    case ScorerKind::Random: return "random";
  }
  return "unknown";
}

ScorerKind parse_scorer_kind(std::string_view text) {
  for (auto kind : {ScorerKind::CrossAttnFirst, ScorerKind::CrossAttnTotal, ScorerKind::SelfAttention,
                    ScorerKind::SelfInformation, ScorerKind::Mock, ScorerKind::Random})
    if (to_string(kind) == text) return kind;
  throw ConfigError("scorer", "unknown scorer '" + std::string(text) +
                                  "': expected cross-first, cross-total, self-attn, self-info, mock or random");
}

std::vector<double> reduce_layers(const std::vector<std::vector<double>>& per_layer, const LayerSelect& select) {
  if (per_layer.empty()) throw ScorerError("no attention layers to reduce");
  std::vector<std::size_t> chosen;
  switch (select.mode) {
    case LayerMode::AllLayers:
      for (std::size_t l = 0; l < per_layer.size(); ++l) chosen.push_back(l);
      break;
    case LayerMode::LastLayer:
      chosen.push_back(per_layer.size() - 1);
      break;
    case LayerMode::Indices:
      if (select.indices.empty()) throw ScorerError("layer selection lists no indices");
      for (int idx : select.indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= per_layer.size())
          throw ScorerError("layer index " + std::to_string(idx) + " out of range: model has " +
                            std::to_string(per_layer.size()) + " layers");
        chosen.push_back(static_cast<std::size_t>(idx));
      }
      break;
  }
  std::vector<double> out(per_layer[chosen.front()].size(), 0.0);
  for (std::size_t l : chosen)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += per_layer[l][i];
  for (double& v : out) v /= static_cast<double>(chosen.size());
  return out;
}

double self_information_bits(double probability) {
  if (!(probability > 0.0) || probability > 1.0)
    throw ScorerError("probability out of range (0, 1]: " + std::to_string(probability));
  return probability == 1.0 ? 0.0 : -std::log2(probability);
}

MockScorer::MockScorer(std::map<std::string, double> table, std::shared_ptr<const Tokenizer> tokenizer)
    : table_(std::move(table)), tokenizer_(std::move(tokenizer)) {
  if (!tokenizer_) throw ScorerError("mock scorer needs a tokenizer");
}

RawScoreVector MockScorer::score(const AttentionRequest& request) {
  const auto tokens = tokenizer_->tokenize(request.context);
  const auto words = segment_words(request.context);
  const auto alignment = align(request.context, tokens, words);

  std::vector<std::size_t> per_word(words.size(), 0);
  for (const auto& w : alignment.word_of_token)
    if (w) ++per_word[*w];

  RawScoreVector out;
  out.unit = "mock";
  out.token_spans = tokens;
  out.scores.reserve(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto& w = alignment.word_of_token[t];
    if (!w) {
      out.scores.push_back(0.0);
      continue;
    }
    const auto it = table_.find(words[*w].text);
    if (it == table_.end()) throw ScorerError("mock score table has no entry for word '" + words[*w].text + "'");
    out.scores.push_back(it->second / static_cast<double>(per_word[*w]));
  }
  return out;
}

RandomScorer::RandomScorer(std::uint64_t seed, std::shared_ptr<const Tokenizer> tokenizer)
    : seed_(seed), tokenizer_(std::move(tokenizer)) {
  if (!tokenizer_) throw ScorerError("random scorer needs a tokenizer");
}

RawScoreVector RandomScorer::score(const AttentionRequest& request) {
  RawScoreVector out;
  out.unit = "uniform";
  out.token_spans = tokenizer_->tokenize(request.context);
  std::mt19937_64 rng(seed_ ^ fnv1a(request.query, fnv1a(request.context)));
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  out.scores.reserve(out.token_spans.size());
  for (std::size_t i = 0; i < out.token_spans.size(); ++i) out.scores.push_back(dist(rng));
  return out;
}

std::unique_ptr<Scorer> make_scorer(ScorerKind kind, const ScorerOptions& options) {
  auto need_model = [&] {
    if (!options.model)
      throw ScorerNotConfiguredError("scorer '" + to_string(kind) + "' is not configured: it needs a model artifact "
                                     "directory (--model)");
  };
  switch (kind) {
    case ScorerKind::CrossAttnFirst:
      need_model();
      return std::make_unique<CrossAttentionScorer>(options.model, options.layers,
                                                    CrossAttentionScorer::Mode::FirstStep);
    case ScorerKind::CrossAttnTotal:
      need_model();
      return std::make_unique<CrossAttentionScorer>(options.model, options.layers,
                                                    CrossAttentionScorer::Mode::TeacherForced);
    case ScorerKind::SelfAttention:
      need_model();
      return std::make_unique<SelfAttentionScorer>(options.model, options.layers);
    case ScorerKind::SelfInformation:
      need_model();
      return std::make_unique<SelfInformationScorer>(options.model);
    case ScorerKind::Mock:
      if (!options.mock_table)
        throw ScorerNotConfiguredError("scorer 'mock' is not configured: it needs a score table (--mock-table)");
      return std::make_unique<MockScorer>(*options.mock_table);
    case ScorerKind::Random:
      if (options.model) {
        // Share the model tokenizer so token counts match the attention scorers.
        std::shared_ptr<const Tokenizer> tok(options.model, &options.model->tokenizer());
        return std::make_unique<RandomScorer>(options.seed, std::move(tok));
      }
      return std::make_unique<RandomScorer>(options.seed);
  }
  throw ScorerError("unknown scorer kind");
}

}  // namespace crossprune
