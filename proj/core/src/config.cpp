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

#include "crossprune/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "crossprune/error.hpp"

namespace crossprune {

using nlohmann::json;

void validate_record(const QARecord& record) {
  if (record.context.empty()) throw InvalidRecordError("record '" + record.id + "': context is empty");
  if (record.query.empty()) throw InvalidRecordError("record '" + record.id + "': query is empty");
}

CompressionConfig validate_config(const CompressionConfig& cfg) {
  if (!std::isfinite(cfg.tau) || cfg.tau <= 0.0 || cfg.tau > 1.0)
    throw ConfigError("tau", "tau out of range: expected 0 < tau <= 1, got " + std::to_string(cfg.tau));
  if (!std::isfinite(cfg.sigma) || cfg.sigma < 0.0)
    throw ConfigError("sigma", "sigma out of range: expected sigma >= 0 (0 disables smoothing), got " +
                                   std::to_string(cfg.sigma));
  if (cfg.window_k < 1)
    throw ConfigError("window_k", "window_k out of range: expected window_k >= 1, got " +
                                      std::to_string(cfg.window_k));
  if (cfg.chunk_size < 8)
    throw ConfigError("chunk_size", "chunk_size out of range: expected chunk_size >= 8, got " +
                                        std::to_string(cfg.chunk_size));
  if (cfg.min_retained < 1)
    throw ConfigError("min_retained", "min_retained out of range: expected min_retained >= 1, got " +
                                          std::to_string(cfg.min_retained));
  if (cfg.layer_select.mode == LayerMode::Indices) {
    if (cfg.layer_select.indices.empty())
      throw ConfigError("layer_select", "layer_select: index list is empty");
    for (int i : cfg.layer_select.indices)
      if (i < 0) throw ConfigError("layer_select", "layer_select: negative layer index " + std::to_string(i));
  }
  return cfg;
}

std::size_t target_retained_count(std::size_t n_words, double tau, int min_retained) {
  if (n_words == 0) return 0;
  // round half up; the epsilon absorbs representation error in products like 0.1 * 5.
  const double scaled = tau * static_cast<double>(n_words);
  auto rounded = static_cast<std::size_t>(std::floor(scaled + 0.5 + 1e-9));
  rounded = std::max(rounded, static_cast<std::size_t>(std::max(min_retained, 1)));
  return std::min(rounded, n_words);
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Single: return "single";
    case Strategy::Chunked1: return "chunk1";
    case Strategy::Chunked2: return "chunk2";
  }
  return "single";
}

std::string to_string(ChunkMerge m) {
  return m == ChunkMerge::GlobalSoftmax ? "global-softmax" : "per-chunk-softmax";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "single" || text == "Single") return Strategy::Single;
  if (text == "chunk1" || text == "Chunked1") return Strategy::Chunked1;
  if (text == "chunk2" || text == "Chunked2") return Strategy::Chunked2;
  throw ConfigError("strategy", "unknown strategy '" + std::string(text) + "' (expected single|chunk1|chunk2)");
}

ChunkMerge parse_chunk_merge(std::string_view text) {
  if (text == "global-softmax") return ChunkMerge::GlobalSoftmax;
  if (text == "per-chunk-softmax") return ChunkMerge::PerChunkSoftmax;
  throw ConfigError("chunk_merge",
                    "unknown chunk_merge '" + std::string(text) + "' (expected global-softmax|per-chunk-softmax)");
}

LayerSelect parse_layer_select(std::string_view text) {
  if (text == "all" || text == "AllLayers") return {};
  if (text == "last" || text == "LastLayer") return {LayerMode::LastLayer, {}};
  LayerSelect sel{LayerMode::Indices, {}};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const auto item = text.substr(pos, comma - pos);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      throw ConfigError("layer_select", "layer_select: expected all|last|comma-separated indices, got '" +
                                            std::string(text) + "'");
    sel.indices.push_back(value);
    pos = comma + 1;
  }
  return sel;
}

std::string to_string(ScoreStage stage) {
  switch (stage) {
    case ScoreStage::RawToken: return "RawToken";
    case ScoreStage::NormalizedToken: return "NormalizedToken";
    case ScoreStage::Word: return "Word";
    case ScoreStage::SmoothedWord: return "SmoothedWord";
  }
  return "RawToken";
}

namespace {

ScoreStage parse_stage(const std::string& s) {
  for (auto stage : {ScoreStage::RawToken, ScoreStage::NormalizedToken, ScoreStage::Word, ScoreStage::SmoothedWord})
    if (to_string(stage) == s) return stage;
  throw Error("unknown score stage '" + s + "'");
}

json layer_select_json(const LayerSelect& sel) {
  switch (sel.mode) {
    case LayerMode::AllLayers: return "all";
    case LayerMode::LastLayer: return "last";
    case LayerMode::Indices: return sel.indices;
  }
  return "all";
}

LayerSelect layer_select_from_json(const json& j) {
  if (j.is_string()) return parse_layer_select(j.get<std::string>());
  if (j.is_array()) {
    LayerSelect sel{LayerMode::Indices, {}};
    for (const auto& v : j) {
      if (!v.is_number_integer()) throw ConfigError("layer_select", "layer_select: indices must be integers");
      sel.indices.push_back(v.get<int>());
    }
    return sel;
  }
  throw ConfigError("layer_select", "layer_select: expected \"all\", \"last\" or an index array");
}

template <typename T>
T field_as(const json& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(name, std::string(name) + ": " + e.what());
  }
}

}  // namespace

json to_json(const CompressionConfig& cfg) {
  return json{{"tau", cfg.tau},
              {"sigma", cfg.sigma},
              {"window_k", cfg.window_k},
              {"chunk_size", cfg.chunk_size},
              {"strategy", to_string(cfg.strategy)},
              {"layer_select", layer_select_json(cfg.layer_select)},
              {"min_retained", cfg.min_retained},
              {"tie_break", std::string(kTieBreakPolicy)},
              {"chunk_merge", to_string(cfg.chunk_merge)}};
}

CompressionConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config", "config must be a JSON object");
  static const std::set<std::string> known = {"tau",          "sigma",        "window_k",  "chunk_size", "strategy",
                                              "layer_select", "min_retained", "tie_break", "chunk_merge"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError(key, "unknown config field '" + key + "'");

  CompressionConfig cfg;
  if (j.contains("tau")) cfg.tau = field_as<double>(j, "tau");
  if (j.contains("sigma")) cfg.sigma = field_as<double>(j, "sigma");
  if (j.contains("window_k")) cfg.window_k = field_as<int>(j, "window_k");
  if (j.contains("chunk_size")) cfg.chunk_size = field_as<int>(j, "chunk_size");
  if (j.contains("strategy")) cfg.strategy = parse_strategy(field_as<std::string>(j, "strategy"));
  if (j.contains("layer_select")) cfg.layer_select = layer_select_from_json(j.at("layer_select"));
  if (j.contains("min_retained")) cfg.min_retained = field_as<int>(j, "min_retained");
  if (j.contains("chunk_merge")) cfg.chunk_merge = parse_chunk_merge(field_as<std::string>(j, "chunk_merge"));
  if (j.contains("tie_break") && field_as<std::string>(j, "tie_break") != kTieBreakPolicy)
    throw ConfigError("tie_break", "tie_break is fixed to '" + std::string(kTieBreakPolicy) + "'");
  return cfg;
}

json to_json(const CompressionResult& r) {
  return json{{"record_id", r.record_id},
              {"compressed_text", r.compressed_text},
              {"retained_word_indices", r.retained_word_indices},
              {"word_scores_raw", {{"stage", to_string(r.word_scores_raw.stage)}, {"values", r.word_scores_raw.values}}},
              {"word_scores_smoothed",
               {{"stage", to_string(r.word_scores_smoothed.stage)}, {"values", r.word_scores_smoothed.values}}},
              {"word_count", r.word_count},
              {"achieved_ratio", r.achieved_ratio},
              {"provenance",
               {{"config", to_json(r.provenance.config)},
                {"scorer", r.provenance.scorer},
                {"input_format", r.provenance.input_format}}}};
}

CompressionResult result_from_json(const json& j) {
  CompressionResult r;
  r.record_id = j.at("record_id").get<std::string>();
  r.compressed_text = j.at("compressed_text").get<std::string>();
  r.retained_word_indices = j.at("retained_word_indices").get<std::vector<std::size_t>>();
  r.word_scores_raw.stage = parse_stage(j.at("word_scores_raw").at("stage").get<std::string>());
  r.word_scores_raw.values = j.at("word_scores_raw").at("values").get<std::vector<double>>();
  r.word_scores_smoothed.stage = parse_stage(j.at("word_scores_smoothed").at("stage").get<std::string>());
  r.word_scores_smoothed.values = j.at("word_scores_smoothed").at("values").get<std::vector<double>>();
  r.word_count = j.at("word_count").get<std::size_t>();
  r.achieved_ratio = j.at("achieved_ratio").get<double>();
  const auto& p = j.at("provenance");
  r.provenance.config = config_from_json(p.at("config"));
  r.provenance.scorer = p.at("scorer").get<std::string>();
  r.provenance.input_format = p.at("input_format").get<std::string>();
  return r;
}

json to_json(const QARecord& record) {
  return json{{"id", record.id}, {"context", record.context}, {"question", record.query}, {"answers", record.answers}};
}

CompressionConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", "config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace crossprune
