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

#include "crossprune/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crossprune/chunking.hpp"
#include "crossprune/error.hpp"

namespace crossprune {

std::vector<double> softmax(std::span<const double> raw) {
  if (raw.empty()) throw PipelineError("softmax of an empty score vector");
  double max = raw[0];
  for (double v : raw) {
    if (!std::isfinite(v)) throw PipelineError("non-finite raw score");
    max = std::max(max, v);
  }
  std::vector<double> out(raw.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::exp(raw[i] - max);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> normalize_aligned(std::span<const double> raw, const Alignment& alignment) {
  if (raw.size() != alignment.token_count())
    throw PipelineError("score count " + std::to_string(raw.size()) + " differs from token count " +
                        std::to_string(alignment.token_count()));
  std::vector<double> kept;
  for (std::size_t t = 0; t < raw.size(); ++t)
    if (alignment.word_of_token[t]) kept.push_back(raw[t]);
  if (kept.empty()) throw PipelineError("no token aligns to a word");
  const auto probs = softmax(kept);
  std::vector<double> out(raw.size(), 0.0);
  for (std::size_t t = 0, k = 0; t < raw.size(); ++t)
    if (alignment.word_of_token[t]) out[t] = probs[k++];
  return out;
}

std::vector<double> aggregate_words(std::span<const double> token_scores, const Alignment& alignment,
                                    std::size_t word_count) {
  if (token_scores.size() != alignment.token_count())
    throw PipelineError("score count " + std::to_string(token_scores.size()) + " differs from token count " +
                        std::to_string(alignment.token_count()));
  std::vector<double> out(word_count, 0.0);
  for (std::size_t t = 0; t < token_scores.size(); ++t) {
    const auto& w = alignment.word_of_token[t];
    if (!w) continue;
    if (*w >= word_count) throw PipelineError("token aligned to word " + std::to_string(*w) + " past the end");
    out[*w] += token_scores[t];
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma, int window_k) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw PipelineError("gaussian kernel needs sigma > 0");
  if (window_k < 0) throw PipelineError("gaussian kernel needs window_k >= 0");
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::acos(-1.0)));
  std::vector<double> g(static_cast<std::size_t>(2 * window_k + 1));
  for (int k = -window_k; k <= window_k; ++k)
    g[static_cast<std::size_t>(k + window_k)] = norm * std::exp(-(k * k) / (2.0 * sigma * sigma));
  return g;
}

std::vector<double> gaussian_smooth(std::span<const double> scores, double sigma, int window_k) {
  if (sigma == 0.0) return {scores.begin(), scores.end()};
  const auto g = gaussian_kernel(sigma, window_k);
  const auto n = static_cast<std::ptrdiff_t>(scores.size());
  std::vector<double> out(scores.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -window_k; k <= window_k; ++k) {
      const std::ptrdiff_t j = i + k;
      if (j >= 0 && j < n) acc += g[static_cast<std::size_t>(k + window_k)] * scores[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

std::vector<std::size_t> select_top(std::span<const double> scores, double tau, int min_retained) {
  const std::size_t target = target_retained_count(scores.size(), tau, min_retained);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(target);
  std::sort(order.begin(), order.end());
  return order;
}

std::string reconstruct(std::string_view text, std::span<const WordSpan> words, std::span<const std::size_t> retained) {
  std::string out;
  for (std::size_t i = 0; i < retained.size(); ++i) {
    const auto& w = words[retained[i]];
    if (i > 0) {
      const std::size_t prev = retained[i - 1];
      if (retained[i] == prev + 1) out.append(text.substr(words[prev].char_end, w.char_start - words[prev].char_end));
      else out += ' ';
    }
    out.append(text.substr(w.char_start, w.length()));
  }
  return out;
}

CompressionResult assemble_result(const QARecord& record, std::span<const WordSpan> words,
                                  std::vector<double> word_scores, const CompressionConfig& cfg,
                                  const std::string& scorer_name) {
  if (word_scores.size() != words.size())
    throw PipelineError("word score count " + std::to_string(word_scores.size()) + " differs from word count " +
                        std::to_string(words.size()));
  CompressionResult result;
  result.record_id = record.id;
  result.word_count = words.size();
  result.word_scores_smoothed = {gaussian_smooth(word_scores, cfg.sigma, cfg.window_k), ScoreStage::SmoothedWord};
  result.word_scores_raw = {std::move(word_scores), ScoreStage::Word};
  result.retained_word_indices = select_top(result.word_scores_smoothed.values, cfg.tau, cfg.min_retained);
  result.compressed_text = reconstruct(record.context, words, result.retained_word_indices);
  result.achieved_ratio = words.empty() ? 0.0
                                        : static_cast<double>(result.retained_word_indices.size()) /
                                              static_cast<double>(words.size());
  result.provenance = Provenance{cfg, scorer_name, Provenance{}.input_format};
  return result;
}

AttentionRequest make_request(const QARecord& record) {
  AttentionRequest req{record.context, record.query, std::nullopt};
  if (!record.answers.empty()) req.target = record.answers.front();
  return req;
}

std::vector<double> score_words(const QARecord& record, Scorer& scorer, std::span<const WordSpan> words) {
  const auto raw = scorer.score(make_request(record));
  if (raw.scores.size() != raw.token_spans.size())
    throw ScorerError(scorer.name() + " returned " + std::to_string(raw.scores.size()) + " scores for " +
                      std::to_string(raw.token_spans.size()) + " tokens");
  const auto alignment = align(record.context, raw.token_spans, words);
  return aggregate_words(normalize_aligned(raw.scores, alignment), alignment, words.size());
}

CompressionResult compress_single(const QARecord& record, Scorer& scorer, const CompressionConfig& cfg) {
  const auto words = segment_words(record.context);
  if (words.empty()) throw InvalidRecordError("record '" + record.id + "': context has no words");
  return assemble_result(record, words, score_words(record, scorer, words), cfg, scorer.name());
}

CompressionResult compress(const QARecord& record, Scorer& scorer, const CompressionConfig& cfg) {
  validate_record(record);
  validate_config(cfg);
  switch (cfg.strategy) {
    case Strategy::Single: return compress_single(record, scorer, cfg);
    case Strategy::Chunked1: return compress_strategy1(record, scorer, cfg);
    case Strategy::Chunked2: return compress_strategy2(record, scorer, cfg);
  }
  throw PipelineError("unknown strategy");
}

}  // namespace crossprune
