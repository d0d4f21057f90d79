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

// Scorer backends: each produces one raw importance score per context token.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crossprune/config.hpp"
#include "crossprune/segmenter.hpp"
#include "crossprune/t5_model.hpp"
#include "crossprune/tokenizer.hpp"

namespace crossprune {

struct AttentionRequest {
  std::string context;
  std::string query;
  std::optional<std::string> target;  // gold answer, teacher-forced variants only
};

/// One raw score per context token; query tokens never appear here.
struct RawScoreVector {
  std::vector<double> scores;
  std::vector<TokenSpan> token_spans;  // offsets into the request context
  std::string unit = "attention";      // "attention", "bits", "mock", "uniform"
};

enum class ScorerKind { CrossAttnFirst, CrossAttnTotal, SelfAttention, SelfInformation, Mock, Random };

std::string to_string(ScorerKind kind);
/// Accepts the CLI spellings: cross-first, cross-total, self-attn, self-info, mock, random.
ScorerKind parse_scorer_kind(std::string_view text);

/// A backend instance runs one inference at a time. Create one per worker;
/// model weights are shared read-only between instances.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::string name() const = 0;
  virtual const Tokenizer& tokenizer() const = 0;

  /// Context tokens that fit next to `query` in one pass; nullopt when unbounded.
  virtual std::optional<std::size_t> context_capacity(std::string_view query) const {
    (void)query;
    return std::nullopt;
  }

  /// Throws WindowOverflowError when the input exceeds the backend window.
  virtual RawScoreVector score(const AttentionRequest& request) = 0;
};

/// Decoder cross-attention over context tokens, averaged over heads and the
/// selected decoder layers.
///
/// FirstStep: the decoder start position attending during the first step.
/// TeacherForced: every step of decoding the gold target (decoder input is
/// the start token followed by the target shifted right), averaged over steps.
class CrossAttentionScorer final : public Scorer {
 public:
  enum class Mode { FirstStep, TeacherForced };

  CrossAttentionScorer(std::shared_ptr<const T5Model> model, LayerSelect layers, Mode mode);

  std::string name() const override;
  const Tokenizer& tokenizer() const override { return model_->tokenizer(); }
  std::optional<std::size_t> context_capacity(std::string_view query) const override;
  RawScoreVector score(const AttentionRequest& request) override;

 private:
  std::shared_ptr<const T5Model> model_;
  LayerSelect layers_;
  Mode mode_;
};

/// Encoder self-attention mass each context token receives from the query
/// tokens (mean over query positions and heads, selected encoder layers).
class SelfAttentionScorer final : public Scorer {
 public:
  SelfAttentionScorer(std::shared_ptr<const T5Model> model, LayerSelect layers);

  std::string name() const override { return "self-attn"; }
  const Tokenizer& tokenizer() const override { return model_->tokenizer(); }
  std::optional<std::size_t> context_capacity(std::string_view query) const override;
  RawScoreVector score(const AttentionRequest& request) override;

 private:
  std::shared_ptr<const T5Model> model_;
  LayerSelect layers_;
};

/// -log2 p(x_i | x_<i): the decoder run as a language model over the context
/// with an empty (end-marker only) encoder input. Scores are in bits.
class SelfInformationScorer final : public Scorer {
 public:
  explicit SelfInformationScorer(std::shared_ptr<const T5Model> model);

  std::string name() const override { return "self-info"; }
  const Tokenizer& tokenizer() const override { return model_->tokenizer(); }
  std::optional<std::size_t> context_capacity(std::string_view query) const override;
  RawScoreVector score(const AttentionRequest& request) override;

 private:
  std::shared_ptr<const T5Model> model_;
};

/// Test seam: each token gets its word's table score divided by the word's
/// token count. Throws ScorerError for words missing from the table.
class MockScorer final : public Scorer {
 public:
  explicit MockScorer(std::map<std::string, double> table,
                      std::shared_ptr<const Tokenizer> tokenizer = std::make_shared<WhitespaceTokenizer>());

  std::string name() const override { return "mock"; }
  const Tokenizer& tokenizer() const override { return *tokenizer_; }
  RawScoreVector score(const AttentionRequest& request) override;

 private:
  std::map<std::string, double> table_;
  std::shared_ptr<const Tokenizer> tokenizer_;
};

/// Uniform scores in [0, 1), seeded by (seed, request text); deterministic.
class RandomScorer final : public Scorer {
 public:
  explicit RandomScorer(std::uint64_t seed,
                        std::shared_ptr<const Tokenizer> tokenizer = std::make_shared<WhitespaceTokenizer>());

  std::string name() const override { return "random"; }
  const Tokenizer& tokenizer() const override { return *tokenizer_; }
  RawScoreVector score(const AttentionRequest& request) override;

 private:
  std::uint64_t seed_;
  std::shared_ptr<const Tokenizer> tokenizer_;
};

struct ScorerOptions {
  std::shared_ptr<const T5Model> model;              // required by the attention and self-information scorers
  LayerSelect layers;
  std::uint64_t seed = 0;                            // Random
  std::optional<std::map<std::string, double>> mock_table;  // Mock
};

/// Builds a scorer. Throws ScorerNotConfiguredError when the kind needs a
/// model (or mock table) that `options` does not provide.
std::unique_ptr<Scorer> make_scorer(ScorerKind kind, const ScorerOptions& options);

/// -log2(p); 0 for p = 1.
double self_information_bits(double probability);

/// Per-layer vectors averaged according to `select`. Throws ScorerError for
/// out-of-range indices.
std::vector<double> reduce_layers(const std::vector<std::vector<double>>& per_layer, const LayerSelect& select);

}  // namespace crossprune
