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

// Metrics and experiments: exact match, information coverage, the
// reciprocal-rank comparison of scorers, and the smoothing-width sweep.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crossprune/config.hpp"
#include "crossprune/scorer.hpp"

namespace crossprune {

enum class Metric { ExactMatch, InfoCoverage, MRR };

std::string to_string(Metric m);  // "EM", "InfoCoverage", "MRR"
Metric parse_metric(std::string_view text);

inline constexpr std::string_view kAnswerNormalization =
    "lowercase; strip ASCII punctuation; drop articles a/an/the; collapse whitespace";

struct EvalReport {
  std::string dataset_id;
  Metric metric = Metric::ExactMatch;
  std::string scorer;
  std::vector<std::string> record_ids;
  std::vector<double> per_example;  // each in [0, 1]
  std::vector<bool> failed;         // scored 0 because the record failed
  std::size_t failure_count = 0;
  double aggregate = 0.0;           // mean(per_example)
  std::vector<std::string> excluded;  // "id: reason" for records left out
  nlohmann::json config = nlohmann::json::object();
  std::string normalization = std::string(kAnswerNormalization);
  std::string link;  // shared by reports from one comparison run

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Arithmetic mean in input order; 0 for an empty list.
double mean(std::span<const double> values);

/// Recomputes aggregate and failure_count from the per-example vectors.
void finalize(EvalReport& report);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Standard QA answer normalization (see kAnswerNormalization).
std::string normalize_answer(std::string_view text);

/// 1 iff the normalized prediction equals some normalized gold. Throws
/// EvaluationError when golds is empty.
int exact_match(std::string_view prediction, std::span<const std::string> golds);

/// 1 iff the normalized answer words occur contiguously in the normalized
/// compressed words. Throws EvaluationError for an empty answer.
int information_coverage(std::string_view compressed, std::string_view answer);

/// Coverage against any of several gold answers.
int information_coverage_any(std::string_view compressed, std::span<const std::string> answers);

/// Positions [first, first + length) in the token list.
struct AnswerSpan {
  std::size_t first = 0;
  std::size_t length = 0;

  friend bool operator==(const AnswerSpan&, const AnswerSpan&) = default;
};

/// Byte range of the first case-insensitive occurrence of `answer`.
std::optional<std::pair<std::size_t, std::size_t>> find_answer(std::string_view context, std::string_view answer);

/// Tokens overlapping the first case-insensitive occurrence of `answer`
/// in `context`. nullopt when the answer does not occur.
std::optional<AnswerSpan> locate_answer_span(std::string_view context, std::string_view answer,
                                             std::span<const TokenSpan> tokens);

/// 1-based rank of every position under a descending sort; equal scores
/// rank the earlier position first.
std::vector<std::size_t> rank_descending(std::span<const double> scores);

/// Mean reciprocal rank. Throws EvaluationError for an empty list.
double mrr_single(std::span<const std::size_t> ranks);

/// Reciprocal-rank score of one record under one scorer, over the
/// word-aligned context tokens. nullopt (with `reason`) when the first gold
/// answer is not a context substring.
std::optional<double> record_mrr(const QARecord& record, Scorer& scorer, std::string* reason = nullptr);

using ScorerFactory = std::function<std::unique_ptr<Scorer>()>;

struct NamedScorer {
  std::string name;
  ScorerFactory make;
};

struct MrrOutcome {
  std::string scorer;
  std::optional<EvalReport> report;  // absent when the scorer failed
  std::string error;                 // failure message, empty on success
};

/// Mean MRR per scorer over the records whose answer occurs in the context.
/// Records that overflow a scorer's window are excluded for that scorer.
/// A failing scorer is reported with its error; the others still run.
std::vector<MrrOutcome> mrr_experiment(std::span<const QARecord> records, std::span<const NamedScorer> scorers,
                                       std::size_t jobs = 1, const std::string& dataset_id = "");

struct SweepReport {
  std::string dataset_id;
  std::string scorer;
  std::vector<double> sigmas;
  std::vector<int> window_k;         // effective half-width per sigma
  std::vector<double> coverage;      // mean information coverage per sigma
  std::vector<std::vector<double>> overlap;  // mean Jaccard of retained sets, sigma x sigma
  std::size_t record_count = 0;
  std::vector<std::string> excluded;
  CompressionConfig config;

  friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

/// Default grid for the sweep.
std::vector<double> default_sigmas();

/// Jaccard similarity of two index sets (1 when both are empty).
double jaccard(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Half-width used for `sigma`: at least cfg.window_k and at least ceil(3 sigma).
int sweep_window(double sigma, int window_k);

/// Compresses every record at each sigma (other settings from cfg) and
/// reports mean coverage and the pairwise retained-set overlap. Throws
/// ConfigError for an empty grid or a non-positive sigma.
SweepReport sigma_sweep(std::span<const QARecord> records, std::span<const double> sigmas,
                        const CompressionConfig& cfg, const ScorerFactory& make_scorer_fn, std::size_t jobs = 1,
                        const std::string& dataset_id = "");

nlohmann::json to_json(const SweepReport& report);

}  // namespace crossprune
