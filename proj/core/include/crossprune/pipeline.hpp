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

// Score pipeline: token scores -> softmax -> word aggregation -> Gaussian
// smoothing -> top-fraction selection -> text reconstruction.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossprune/config.hpp"
#include "crossprune/scorer.hpp"
#include "crossprune/segmenter.hpp"

namespace crossprune {

/// Numerically stable softmax (max subtracted first). Throws PipelineError
/// for empty input or non-finite values.
std::vector<double> softmax(std::span<const double> raw);

/// Softmax over the tokens that align to a word. Unaligned tokens (special
/// or bare-whitespace pieces) get 0, so the word scores still sum to 1.
std::vector<double> normalize_aligned(std::span<const double> raw, const Alignment& alignment);

/// s(w) = sum of the scores of tokens aligned to w. Unaligned tokens are ignored.
std::vector<double> aggregate_words(std::span<const double> token_scores, const Alignment& alignment,
                                    std::size_t word_count);

/// Unnormalized Gaussian weights g(k) = exp(-k^2 / 2 sigma^2) / (sigma sqrt(2 pi))
/// for k = -window_k..window_k. Requires sigma > 0.
std::vector<double> gaussian_kernel(double sigma, int window_k);

/// s'(i) = sum_k g(k) s(i + k), zero outside the sequence. sigma = 0 returns
/// the input unchanged.
std::vector<double> gaussian_smooth(std::span<const double> scores, double sigma, int window_k);

/// Indices of the target_retained_count(n, tau, min_retained) highest
/// scores, ascending. Equal scores favour the earlier position.
std::vector<std::size_t> select_top(std::span<const double> scores, double tau, int min_retained = 1);

/// Retained words in original order. Adjacent retained words keep the
/// original separator between them; gaps become a single space.
std::string reconstruct(std::string_view text, std::span<const WordSpan> words, std::span<const std::size_t> retained);

/// Smooths word scores, selects, reconstructs and fills provenance.
CompressionResult assemble_result(const QARecord& record, std::span<const WordSpan> words,
                                  std::vector<double> word_scores, const CompressionConfig& cfg,
                                  const std::string& scorer_name);

/// Word scores for one scorer pass over the whole context.
std::vector<double> score_words(const QARecord& record, Scorer& scorer, std::span<const WordSpan> words);

/// The whole context in one scorer pass. Throws WindowOverflowError when it
/// does not fit the backend window.
CompressionResult compress_single(const QARecord& record, Scorer& scorer, const CompressionConfig& cfg);

/// Validates record and config, then dispatches on cfg.strategy.
CompressionResult compress(const QARecord& record, Scorer& scorer, const CompressionConfig& cfg);

/// The request a scorer sees for `record` (first gold answer as target).
AttentionRequest make_request(const QARecord& record);

}  // namespace crossprune
