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

#include "crossprune/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "crossprune/error.hpp"
#include "crossprune/parallel.hpp"
#include "crossprune/pipeline.hpp"

namespace crossprune {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& w : segment_words(text)) out.push_back(w.text);
  return out;
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

std::string to_string(Metric m) {
  switch (m) {
    case Metric::ExactMatch: return "EM";
    case Metric::InfoCoverage: return "InfoCoverage";
    case Metric::MRR: return "MRR";
  }
  return "unknown";
}

Metric parse_metric(std::string_view text) {
  for (auto m : {Metric::ExactMatch, Metric::InfoCoverage, Metric::MRR})
    if (to_string(m) == text) return m;
  throw ConfigError("metric", "unknown metric '" + std::string(text) + "': expected EM, InfoCoverage or MRR");
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

void finalize(EvalReport& report) {
  if (report.failed.size() < report.per_example.size()) report.failed.resize(report.per_example.size(), false);
  report.aggregate = mean(report.per_example);
  report.failure_count = static_cast<std::size_t>(std::count(report.failed.begin(), report.failed.end(), true));
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"dataset_id", r.dataset_id},   {"metric", to_string(r.metric)},
          {"scorer", r.scorer},           {"record_ids", r.record_ids},
          {"per_example", r.per_example}, {"failed", r.failed},
          {"failure_count", r.failure_count}, {"aggregate", r.aggregate},
          {"excluded", r.excluded},       {"config", r.config},
          {"normalization", r.normalization}, {"link", r.link}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.metric = parse_metric(j.at("metric").get<std::string>());
    r.scorer = j.value("scorer", std::string());
    r.record_ids = j.at("record_ids").get<std::vector<std::string>>();
    r.per_example = j.at("per_example").get<std::vector<double>>();
    r.failed = j.value("failed", std::vector<bool>(r.per_example.size(), false));
    r.failure_count = j.value("failure_count", std::size_t{0});
    r.aggregate = j.at("aggregate").get<double>();
    r.excluded = j.value("excluded", std::vector<std::string>{});
    r.config = j.value("config", nlohmann::json::object());
    r.normalization = j.value("normalization", r.normalization);
    r.link = j.value("link", std::string());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw EvaluationError(std::string("malformed report: ") + e.what());
  }
}

std::string normalize_answer(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text)
    if (!std::ispunct(static_cast<unsigned char>(c))) cleaned += lower(c);
  std::string out;
  for (const auto& w : split_ws(cleaned)) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

int exact_match(std::string_view prediction, std::span<const std::string> golds) {
  if (golds.empty()) throw EvaluationError("exact match needs at least one gold answer");
  const auto p = normalize_answer(prediction);
  for (const auto& g : golds)
    if (normalize_answer(g) == p) return 1;
  return 0;
}

int information_coverage(std::string_view compressed, std::string_view answer) {
  if (answer.find_first_not_of(" \t\n\r\v\f") == std::string_view::npos)
    throw EvaluationError("information coverage needs a non-empty answer");
  auto needle = split_ws(normalize_answer(answer));
  auto hay = split_ws(normalize_answer(compressed));
  if (needle.empty()) {
    // Answer made only of articles or punctuation: compare lowercased words.
    std::string a(answer), c(compressed);
    std::transform(a.begin(), a.end(), a.begin(), lower);
    std::transform(c.begin(), c.end(), c.begin(), lower);
    needle = split_ws(a);
    hay = split_ws(c);
  }
  return contains_run(hay, needle) ? 1 : 0;
}

int information_coverage_any(std::string_view compressed, std::span<const std::string> answers) {
  if (answers.empty()) throw EvaluationError("information coverage needs at least one gold answer");
  for (const auto& a : answers)
    if (information_coverage(compressed, a)) return 1;
  return 0;
}

std::optional<std::pair<std::size_t, std::size_t>> find_answer(std::string_view context, std::string_view answer) {
  if (answer.empty()) return std::nullopt;
  const auto it = std::search(context.begin(), context.end(), answer.begin(), answer.end(),
                              [](char a, char b) { return lower(a) == lower(b); });
  if (it == context.end()) return std::nullopt;
  const auto start = static_cast<std::size_t>(it - context.begin());
  return std::make_pair(start, start + answer.size());
}

std::optional<AnswerSpan> locate_answer_span(std::string_view context, std::string_view answer,
                                             std::span<const TokenSpan> tokens) {
  const auto range = find_answer(context, answer);
  if (!range) return std::nullopt;
  std::optional<AnswerSpan> span;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto& tok = tokens[t];
    if (tok.empty() || tok.char_end <= range->first || tok.char_start >= range->second) continue;
    if (!span) span = AnswerSpan{t, 0};
    span->length = t - span->first + 1;
  }
  return span;
}

std::vector<std::size_t> rank_descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> rank(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  return rank;
}

double mrr_single(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw EvaluationError("reciprocal rank of an empty answer span");
  double sum = 0.0;
  for (auto r : ranks) {
    if (r == 0) throw EvaluationError("ranks are 1-based; got 0");
    sum += 1.0 / static_cast<double>(r);
  }
  return sum / static_cast<double>(ranks.size());
}

std::optional<double> record_mrr(const QARecord& record, Scorer& scorer, std::string* reason) {
  auto excluded = [&](std::string why) -> std::optional<double> {
    if (reason) *reason = std::move(why);
    return std::nullopt;
  };
  if (record.answers.empty()) return excluded("no gold answer");
  if (!find_answer(record.context, record.answers.front())) return excluded("answer is not a context substring");

  const auto raw = scorer.score(make_request(record));
  if (raw.scores.size() != raw.token_spans.size())
    throw ScorerError(scorer.name() + " returned mismatched score and token counts");
  const auto words = segment_words(record.context);
  const auto alignment = align(record.context, raw.token_spans, words);
  std::vector<TokenSpan> tokens;
  std::vector<double> scores;
  for (std::size_t t = 0; t < raw.token_spans.size(); ++t) {
    if (!alignment.word_of_token[t]) continue;
    tokens.push_back(raw.token_spans[t]);
    scores.push_back(raw.scores[t]);
  }
  const auto span = locate_answer_span(record.context, record.answers.front(), tokens);
  if (!span) return excluded("answer overlaps no scored token");

  const auto rank = rank_descending(scores);
  std::vector<std::size_t> ranks(rank.begin() + static_cast<std::ptrdiff_t>(span->first),
                                 rank.begin() + static_cast<std::ptrdiff_t>(span->first + span->length));
  return mrr_single(ranks);
}

std::vector<MrrOutcome> mrr_experiment(std::span<const QARecord> records, std::span<const NamedScorer> scorers,
                                       std::size_t jobs, const std::string& dataset_id) {
  std::vector<std::size_t> included;
  std::vector<std::string> excluded;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.answers.empty()) excluded.push_back(r.id + ": no gold answer");
    else if (!find_answer(r.context, r.answers.front())) excluded.push_back(r.id + ": answer is not a context substring");
    else included.push_back(i);
  }

  std::vector<MrrOutcome> outcomes;
  for (const auto& s : scorers) {
    MrrOutcome outcome{s.name, std::nullopt, {}};
    try {
      using Slot = std::pair<std::optional<double>, std::string>;
      const auto slots = parallel_map<std::unique_ptr<Scorer>, Slot>(
          included.size(), jobs, s.make, [&](std::unique_ptr<Scorer>& scorer, std::size_t k) {
            std::string reason;
            try {
              auto v = record_mrr(records[included[k]], *scorer, &reason);
              return Slot{v, reason};
            } catch (const WindowOverflowError& e) {
              return Slot{std::nullopt, e.what()};
            }
          });
      EvalReport report;
      report.dataset_id = dataset_id;
      report.metric = Metric::MRR;
      report.scorer = s.name;
      report.excluded = excluded;
      report.link = "mrr-experiment";
      for (std::size_t k = 0; k < slots.size(); ++k) {
        const auto& rec = records[included[k]];
        if (!slots[k].first) {
          report.excluded.push_back(rec.id + ": " + slots[k].second);
          continue;
        }
        report.record_ids.push_back(rec.id);
        report.per_example.push_back(*slots[k].first);
      }
      finalize(report);
      outcome.report = std::move(report);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

std::vector<double> default_sigmas() { return {1.0, 2.0, 3.0, 4.0, 5.0}; }

double jaccard(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  const std::set<std::size_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (auto x : sa) inter += sb.count(x);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

int sweep_window(double sigma, int window_k) {
  return std::max(window_k, static_cast<int>(std::ceil(3.0 * sigma - 1e-9)));
}

SweepReport sigma_sweep(std::span<const QARecord> records, std::span<const double> sigmas,
                        const CompressionConfig& cfg, const ScorerFactory& make_scorer_fn, std::size_t jobs,
                        const std::string& dataset_id) {
  if (sigmas.empty()) throw ConfigError("sigmas", "sigma sweep needs at least one sigma");
  for (double s : sigmas)
    if (!(s > 0.0) || !std::isfinite(s))
      throw ConfigError("sigmas", "sigma sweep values must be > 0, got " + std::to_string(s));
  validate_config(cfg);

  SweepReport report;
  report.dataset_id = dataset_id;
  report.sigmas.assign(sigmas.begin(), sigmas.end());
  report.config = cfg;
  std::vector<CompressionConfig> configs;
  for (double s : sigmas) {
    auto c = cfg;
    c.sigma = s;
    c.window_k = sweep_window(s, cfg.window_k);
    report.window_k.push_back(c.window_k);
    configs.push_back(c);
  }

  struct PerRecord {
    std::vector<std::vector<std::size_t>> retained;
    std::vector<int> coverage;  // empty when the record has no answer
  };
  std::string scorer_name;
  const auto rows = parallel_map<std::unique_ptr<Scorer>, PerRecord>(
      records.size(), jobs, make_scorer_fn, [&](std::unique_ptr<Scorer>& scorer, std::size_t i) {
        const auto& rec = records[i];
        validate_record(rec);
        PerRecord row;
        std::vector<WordSpan> words;
        std::vector<double> word_scores;
        if (cfg.strategy == Strategy::Single) {
          words = segment_words(rec.context);
          word_scores = score_words(rec, *scorer, words);
        }
        for (const auto& c : configs) {
          const auto result = cfg.strategy == Strategy::Single
                                  ? assemble_result(rec, words, word_scores, c, scorer->name())
                                  : compress(rec, *scorer, c);
          row.retained.push_back(result.retained_word_indices);
          if (!rec.answers.empty()) row.coverage.push_back(information_coverage_any(result.compressed_text, rec.answers));
        }
        return row;
      });
  if (auto probe = make_scorer_fn()) report.scorer = probe->name();

  const std::size_t m = sigmas.size();
  report.coverage.assign(m, 0.0);
  report.overlap.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].coverage.empty()) report.excluded.push_back(records[i].id + ": no gold answer (coverage skipped)");
  for (std::size_t a = 0; a < m; ++a) {
    std::vector<double> cov;
    for (const auto& row : rows)
      if (!row.coverage.empty()) cov.push_back(row.coverage[a]);
    report.coverage[a] = mean(cov);
    for (std::size_t b = 0; b < m; ++b) {
      std::vector<double> ov;
      for (const auto& row : rows) ov.push_back(jaccard(row.retained[a], row.retained[b]));
      report.overlap[a][b] = rows.empty() ? 1.0 : mean(ov);
    }
  }
  report.record_count = rows.size();
  return report;
}

nlohmann::json to_json(const SweepReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.sigmas.size(); ++i)
    rows.push_back({{"sigma", r.sigmas[i]},
                    {"window_k", r.window_k[i]},
                    {"coverage", r.coverage[i]},
                    {"overlap_with_first", r.overlap[i][0]}});
  return {{"dataset_id", r.dataset_id}, {"scorer", r.scorer},           {"record_count", r.record_count},
          {"rows", rows},               {"overlap_matrix", r.overlap},  {"excluded", r.excluded},
          {"config", to_json(r.config)}};
}

}  // namespace crossprune
