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

#include "crossprune/chunking.hpp"

#include "crossprune/error.hpp"
#include "crossprune/pipeline.hpp"

namespace crossprune {

namespace {

struct Prepared {
  std::vector<WordSpan> words;
  std::vector<Chunk> chunks;
};

Prepared prepare(const QARecord& record, const Scorer& scorer, const CompressionConfig& cfg,
                 const std::string& strategy) {
  Prepared p;
  p.words = segment_words(record.context);
  if (p.words.empty()) throw InvalidRecordError("record '" + record.id + "': context has no words");
  const auto tokens = scorer.tokenizer().tokenize(record.context);
  p.chunks = make_chunks(record.context, tokens, p.words, static_cast<std::size_t>(cfg.chunk_size));

  if (const auto capacity = scorer.context_capacity(record.query)) {
    for (const auto& c : p.chunks)
      if (c.token_count > *capacity)
        throw WindowOverflowError(c.token_count, *capacity,
                                  strategy + ": chunk " + std::to_string(c.index) + " has " +
                                      std::to_string(c.token_count) + " tokens but only " + std::to_string(*capacity) +
                                      " fit next to the query; lower the chunk size");
  }
  return p;
}

QARecord chunk_record(const QARecord& record, const Chunk& c) {
  QARecord sub = record;
  sub.id = record.id + "#" + std::to_string(c.index);
  sub.context = record.context.substr(c.char_begin, c.char_end - c.char_begin);
  return sub;
}

// Scorer and alignment failures are reported with the chunk they came from;
// window and configuration errors keep their type.
template <typename F>
auto in_chunk(std::size_t index, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const WindowOverflowError&) {
    throw;
  } catch (const ScorerNotConfiguredError&) {
    throw;
  } catch (const ChunkError&) {
    throw;
  } catch (const Error& e) {
    throw ChunkError(index, e.what());
  }
}

}  // namespace

std::vector<Chunk> make_chunks(std::string_view context, std::span<const TokenSpan> tokens,
                               std::span<const WordSpan> words, std::size_t chunk_size) {
  if (chunk_size == 0) throw ConfigError("chunk_size", "chunk_size must be positive");
  if (words.empty()) return {};
  const auto alignment = align(context, tokens, words);

  std::vector<std::size_t> per_word(words.size(), 0);
  std::size_t pending = 0;  // unaligned tokens waiting for the next word
  for (const auto& w : alignment.word_of_token) {
    if (!w) {
      ++pending;
      continue;
    }
    per_word[*w] += 1 + pending;
    pending = 0;
  }
  per_word.back() += pending;

  std::vector<Chunk> chunks;
  Chunk cur;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (per_word[w] > chunk_size)
      throw ChunkError(chunks.size(), "word '" + words[w].text + "' needs " + std::to_string(per_word[w]) +
                                          " tokens, more than the chunk size " + std::to_string(chunk_size));
    if (cur.token_count + per_word[w] > chunk_size && cur.word_end > cur.word_begin) {
      chunks.push_back(cur);
      cur = Chunk{};
      cur.index = chunks.size();
    }
    if (cur.word_end == cur.word_begin) {
      cur.word_begin = w;
      cur.char_begin = words[w].char_start;
    }
    cur.word_end = w + 1;
    cur.char_end = words[w].char_end;
    cur.token_count += per_word[w];
  }
  chunks.push_back(cur);
  return chunks;
}

CompressionResult compress_strategy1(const QARecord& record, Scorer& scorer, const CompressionConfig& cfg) {
  const auto p = prepare(record, scorer, cfg, "chunk1");

  CompressionResult result;
  result.record_id = record.id;
  result.word_count = p.words.size();
  result.word_scores_raw.stage = ScoreStage::Word;
  result.word_scores_smoothed.stage = ScoreStage::SmoothedWord;
  for (const auto& c : p.chunks) {
    const auto part = in_chunk(c.index, [&] { return compress_single(chunk_record(record, c), scorer, cfg); });
    if (part.word_count != c.word_end - c.word_begin)
      throw ChunkError(c.index, "word count changed after slicing the chunk");
    if (!part.compressed_text.empty()) {
      if (!result.compressed_text.empty()) result.compressed_text += ' ';
      result.compressed_text += part.compressed_text;
    }
    for (auto i : part.retained_word_indices) result.retained_word_indices.push_back(c.word_begin + i);
    auto& raw = result.word_scores_raw.values;
    raw.insert(raw.end(), part.word_scores_raw.values.begin(), part.word_scores_raw.values.end());
    auto& smooth = result.word_scores_smoothed.values;
    smooth.insert(smooth.end(), part.word_scores_smoothed.values.begin(), part.word_scores_smoothed.values.end());
  }
  result.achieved_ratio =
      static_cast<double>(result.retained_word_indices.size()) / static_cast<double>(result.word_count);
  result.provenance = Provenance{cfg, scorer.name(), Provenance{}.input_format};
  return result;
}

CompressionResult compress_strategy2(const QARecord& record, Scorer& scorer, const CompressionConfig& cfg) {
  const auto p = prepare(record, scorer, cfg, "chunk2");

  std::vector<TokenSpan> spans;
  std::vector<double> normalized;
  std::vector<double> raw_all;
  std::vector<std::size_t> chunk_of_token;
  for (const auto& c : p.chunks) {
    const auto raw = in_chunk(c.index, [&] { return scorer.score(make_request(chunk_record(record, c))); });
    if (raw.scores.size() != raw.token_spans.size())
      throw ChunkError(c.index, scorer.name() + " returned mismatched score and token counts");
    for (std::size_t t = 0; t < raw.token_spans.size(); ++t) {
      TokenSpan s = raw.token_spans[t];
      s.token_index = spans.size();
      s.char_start += c.char_begin;
      s.char_end += c.char_begin;
      spans.push_back(s);
      raw_all.push_back(raw.scores[t]);
      chunk_of_token.push_back(c.index);
    }
  }

  const auto alignment = align(record.context, spans, p.words);
  std::vector<double> token_scores;
  if (cfg.chunk_merge == ChunkMerge::GlobalSoftmax) {
    token_scores = normalize_aligned(raw_all, alignment);
  } else {
    token_scores.assign(raw_all.size(), 0.0);
    const double chunks = static_cast<double>(p.chunks.size());
    std::size_t begin = 0;
    while (begin < raw_all.size()) {
      std::size_t end = begin;
      while (end < raw_all.size() && chunk_of_token[end] == chunk_of_token[begin]) ++end;
      Alignment local;
      local.word_of_token.assign(alignment.word_of_token.begin() + static_cast<std::ptrdiff_t>(begin),
                                 alignment.word_of_token.begin() + static_cast<std::ptrdiff_t>(end));
      const auto part = in_chunk(chunk_of_token[begin], [&] {
        return normalize_aligned(std::span<const double>(raw_all).subspan(begin, end - begin), local);
      });
      for (std::size_t t = begin; t < end; ++t) token_scores[t] = part[t - begin] / chunks;
      begin = end;
    }
  }
  return assemble_result(record, p.words, aggregate_words(token_scores, alignment, p.words.size()), cfg,
                         scorer.name());
}

}  // namespace crossprune
