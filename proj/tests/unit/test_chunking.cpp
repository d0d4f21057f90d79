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

#include <doctest.h>

#include <numeric>
#include <random>

#include "crossprune/chunking.hpp"
#include "crossprune/error.hpp"
#include "crossprune/pipeline.hpp"
#include "synthetic.hpp"

using namespace crossprune;
using crossprune::testing::answer_boost_table;
using crossprune::testing::synthetic_qa;
using crossprune::testing::tiny_model_dir;

namespace {

std::shared_ptr<const T5Model> model() {
  static const auto m = T5Model::load(tiny_model_dir());
  return m;
}

}  // namespace

TEST_CASE("chunks partition the words and respect the token budget") {
  std::mt19937_64 rng(11);
  for (const auto& s : synthetic_qa(150, 12, 1, 80)) {
    const std::size_t pieces = 1 + rng() % 3;
    const WhitespaceTokenizer tok(pieces);
    const auto& text = s.record.context;
    const auto words = segment_words(text);
    const auto tokens = tok.tokenize(text);
    const std::size_t size = 12 + rng() % 40;
    const auto chunks = make_chunks(text, tokens, words, size);
    REQUIRE_FALSE(chunks.empty());
    CHECK(chunks.front().word_begin == 0);
    CHECK(chunks.back().word_end == words.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const auto& c = chunks[i];
      CHECK(c.index == i);
      CHECK(c.word_end > c.word_begin);
      CHECK(c.token_count <= size);
      CHECK(c.char_begin == words[c.word_begin].char_start);
      CHECK(c.char_end == words[c.word_end - 1].char_end);
      if (i + 1 < chunks.size()) {
        CHECK(chunks[i + 1].word_begin == c.word_end);
        // Greedy: the next chunk's first word would not have fitted.
        const auto& w = words[c.word_end];
        const auto need = (w.char_end - w.char_start + pieces - 1) / pieces;
        CHECK(c.token_count + need > size);
      }
      total += c.token_count;
    }
    CHECK(total == tokens.size());
  }
}

TEST_CASE("unaligned tokens are charged to the following word") {
  const std::string text = "ab cd";
  const auto words = segment_words(text);
  const std::vector<TokenSpan> tokens{{0, 5, 0, 0}, {1, 6, 0, 2}, {2, 7, 2, 3}, {3, 8, 3, 5}};
  const auto chunks = make_chunks(text, tokens, words, 2);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].token_count == 2);
  CHECK(chunks[1].token_count == 2);
}

TEST_CASE("a word longer than the chunk budget is a chunk error") {
  const std::string text = "short enormousword";
  const WhitespaceTokenizer tok(1);
  CHECK_THROWS_AS(make_chunks(text, tok.tokenize(text), segment_words(text), 8), ChunkError);
}

TEST_CASE("strategies agree with the single pass when one chunk holds everything") {
  for (const auto& s : synthetic_qa(40, 13)) {
    MockScorer mock(answer_boost_table(s, 5));
    CompressionConfig cfg;
    cfg.tau = 0.3;
    const auto single = compress(s.record, mock, cfg);
    cfg.strategy = Strategy::Chunked1;
    const auto one = compress(s.record, mock, cfg);
    cfg.strategy = Strategy::Chunked2;
    const auto two = compress(s.record, mock, cfg);
    CHECK(one.retained_word_indices == single.retained_word_indices);
    CHECK(two.retained_word_indices == single.retained_word_indices);
    CHECK(one.compressed_text == single.compressed_text);
    CHECK(two.compressed_text == single.compressed_text);
  }
}

TEST_CASE("strategy 2 with a global softmax is chunking-invariant for position-free scores") {
  std::mt19937_64 rng(14);
  for (const auto& s : synthetic_qa(60, 15, 20, 120)) {
    MockScorer mock(answer_boost_table(s, rng()), std::make_shared<WhitespaceTokenizer>(2));
    CompressionConfig cfg;
    cfg.tau = 0.25;
    cfg.sigma = 1.5;
    const auto single = compress(s.record, mock, cfg);
    cfg.strategy = Strategy::Chunked2;
    cfg.chunk_size = 8 + static_cast<int>(rng() % 30);
    const auto chunked = compress(s.record, mock, cfg);
    CHECK(chunked.retained_word_indices == single.retained_word_indices);
    for (std::size_t i = 0; i < single.word_count; ++i)
      CHECK(chunked.word_scores_raw.values[i] == doctest::Approx(single.word_scores_raw.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("strategy 1 retains the per-chunk target counts") {
  std::mt19937_64 rng(16);
  for (const auto& s : synthetic_qa(60, 17, 20, 120)) {
    RandomScorer rnd(rng());
    CompressionConfig cfg;
    cfg.tau = 0.4;
    cfg.chunk_size = 8 + static_cast<int>(rng() % 30);
    cfg.strategy = Strategy::Chunked1;
    const auto result = compress(s.record, rnd, cfg);

    const auto words = segment_words(s.record.context);
    const auto chunks = make_chunks(s.record.context, rnd.tokenizer().tokenize(s.record.context), words,
                                    static_cast<std::size_t>(cfg.chunk_size));
    std::size_t want = 0;
    for (const auto& c : chunks) {
      const auto n = c.word_end - c.word_begin;
      want += target_retained_count(n, cfg.tau, cfg.min_retained);
      std::size_t inside = 0;
      for (auto i : result.retained_word_indices) inside += (i >= c.word_begin && i < c.word_end);
      CHECK(inside == target_retained_count(n, cfg.tau, cfg.min_retained));
    }
    CHECK(result.retained_word_indices.size() == want);
    CHECK(std::is_sorted(result.retained_word_indices.begin(), result.retained_word_indices.end()));
    CHECK(result.word_count == words.size());
  }
}

TEST_CASE("per-chunk softmax merge keeps a unit total") {
  for (const auto& s : synthetic_qa(20, 18, 40, 90)) {
    RandomScorer rnd(3);
    CompressionConfig cfg;
    cfg.strategy = Strategy::Chunked2;
    cfg.chunk_merge = ChunkMerge::PerChunkSoftmax;
    cfg.chunk_size = 16;
    const auto r = compress(s.record, rnd, cfg);
    const auto& v = r.word_scores_raw.values;
    CHECK(std::accumulate(v.begin(), v.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("chunked strategies run contexts longer than the model window") {
  std::string context;
  for (int i = 0; i < 300; ++i) context += (i % 3 == 0 ? "the barn " : "key ");
  const QARecord rec{"long", context, "Where is the key?", {"barn"}};
  CrossAttentionScorer scorer(model(), {}, CrossAttentionScorer::Mode::FirstStep);
  CompressionConfig cfg;
  CHECK_THROWS_AS(compress(rec, scorer, cfg), WindowOverflowError);
  cfg.chunk_size = 128;
  for (auto strategy : {Strategy::Chunked1, Strategy::Chunked2}) {
    cfg.strategy = strategy;
    const auto r = compress(rec, scorer, cfg);
    CHECK(r.word_count == segment_words(context).size());
    CHECK(r.achieved_ratio == doctest::Approx(0.5).epsilon(0.02));
  }
  cfg.chunk_size = 400;
  cfg.strategy = Strategy::Chunked2;
  CHECK_THROWS_WITH_AS(compress(rec, scorer, cfg), doctest::Contains("lower the chunk size"), WindowOverflowError);
}

TEST_CASE("scorer failures name the chunk they came from") {
  const QARecord rec{"r", "alpha beta gamma delta epsilon zeta eta theta iota kappa", "q", {}};
  MockScorer mock({{"alpha", 1}, {"beta", 1}, {"gamma", 1}, {"delta", 1}, {"epsilon", 1}, {"zeta", 1}, {"eta", 1}, {"theta", 1}});
  CompressionConfig cfg;
  cfg.chunk_size = 8;
  for (auto strategy : {Strategy::Chunked1, Strategy::Chunked2}) {
    cfg.strategy = strategy;
    try {
      compress(rec, mock, cfg);
      FAIL("expected ChunkError");
    } catch (const ChunkError& e) {
      CHECK(e.chunk_index() == 1);
    }
  }
}
