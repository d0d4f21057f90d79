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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "crossprune/error.hpp"
#include "crossprune/pipeline.hpp"
#include "synthetic.hpp"

using namespace crossprune;
using crossprune::testing::random_vector;

TEST_CASE("softmax: distribution, shift invariance, large inputs") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_vector(rng, 1 + rng() % 50);
    const auto p = softmax(v);
    // Direct formula as an independent route.
    double z = 0.0;
    for (double x : v) z += std::exp(x);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(p[i] == doctest::Approx(std::exp(v[i]) / z).epsilon(1e-12));
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    auto shifted = v;
    for (auto& x : shifted) x += 123.0;
    const auto q = softmax(shifted);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-9));
  }
  const auto big = softmax(std::vector<double>{1000.0, 1000.0});
  CHECK(big[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(softmax(std::vector<double>{}), PipelineError);
  CHECK_THROWS_AS(softmax(std::vector<double>{1.0, NAN}), PipelineError);
}

TEST_CASE("unaligned tokens are excluded from normalization") {
  Alignment a;
  a.word_of_token = {0u, std::nullopt, 1u};
  const auto p = normalize_aligned(std::vector<double>{0.0, 50.0, 0.0}, a);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == 0.0);
  CHECK(p[2] == doctest::Approx(0.5));
  Alignment none;
  none.word_of_token = {std::nullopt};
  CHECK_THROWS_AS(normalize_aligned(std::vector<double>{1.0}, none), PipelineError);
}

TEST_CASE("word aggregation sums token scores and conserves mass") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t words = 1 + rng() % 15;
    Alignment a;
    std::vector<double> scores;
    double aligned_total = 0.0;
    std::vector<double> expected(words, 0.0);
    for (std::size_t w = 0; w < words; ++w) {
      const auto pieces = 1 + rng() % 3;
      for (std::size_t k = 0; k < pieces; ++k) {
        const double s = std::uniform_real_distribution<double>(0, 1)(rng);
        a.word_of_token.push_back(w);
        scores.push_back(s);
        expected[w] += s;
        aligned_total += s;
      }
      if (rng() % 4 == 0) {
        a.word_of_token.push_back(std::nullopt);
        scores.push_back(9.0);
      }
    }
    const auto got = aggregate_words(scores, a, words);
    for (std::size_t w = 0; w < words; ++w) CHECK(got[w] == doctest::Approx(expected[w]).epsilon(1e-12));
    CHECK(std::accumulate(got.begin(), got.end(), 0.0) == doctest::Approx(aligned_total).epsilon(1e-12));
  }
  Alignment a;
  a.word_of_token = {0u};
  CHECK_THROWS_AS(aggregate_words(std::vector<double>{1.0, 2.0}, a, 1), PipelineError);
}

TEST_CASE("gaussian kernel closed form") {
  const auto g = gaussian_kernel(1.0, 1);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(0.2419707245).epsilon(1e-9));
  CHECK(g[1] == doctest::Approx(0.3989422804).epsilon(1e-9));
  CHECK(g[2] == g[0]);
  const auto s = gaussian_smooth(std::vector<double>{0, 1, 0}, 1.0, 1);
  CHECK(std::abs(s[0] - 0.241971) < 1e-6);
  CHECK(std::abs(s[1] - 0.398942) < 1e-6);
  CHECK(std::abs(s[2] - 0.241971) < 1e-6);
  CHECK_THROWS_AS(gaussian_kernel(0.0, 1), PipelineError);
}

TEST_CASE("smoothing: zero sigma is the identity, zero padding at the edges") {
  const std::vector<double> v{3, 1, 4, 1, 5};
  CHECK(gaussian_smooth(v, 0.0, 3) == v);
  const auto s = gaussian_smooth(std::vector<double>{1.0}, 2.0, 3);
  CHECK(s[0] == doctest::Approx(gaussian_kernel(2.0, 3)[3]));
}

TEST_CASE("smoothing: raising one score lifts neighbours within K only") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    const int k = 1 + static_cast<int>(rng() % 4);
    const double sigma = std::uniform_real_distribution<double>(0.8, 4.0)(rng);
    auto v = random_vector(rng, n, 0.0, 1.0);
    const auto before = gaussian_smooth(v, sigma, k);
    const std::size_t j = rng() % n;
    v[j] += std::uniform_real_distribution<double>(0.01, 2.0)(rng);
    const auto after = gaussian_smooth(v, sigma, k);
    for (std::size_t i = 0; i < n; ++i) {
      const auto dist = static_cast<int>(i > j ? i - j : j - i);
      if (dist <= k) CHECK(after[i] > before[i]);
      else CHECK(after[i] == before[i]);
    }
  }
}

TEST_CASE("selection count and tie handling") {
  for (std::size_t n = 1; n <= 50; ++n)
    for (int quarters = 1; quarters <= 4; ++quarters) {
      const double tau = quarters / 4.0;
      // Exact rational oracle: round_half_up(q * n / 4) = floor((2 q n + 4) / 8).
      const std::size_t want = std::max<std::size_t>(1, (2 * quarters * n + 4) / 8);
      CHECK(select_top(std::vector<double>(n, 0.0), tau).size() == want);
    }
  const auto picked = select_top(std::vector<double>{1, 2, 2, 2, 0}, 0.4);
  CHECK(picked == std::vector<std::size_t>{1, 2});
  CHECK(select_top(std::vector<double>{}, 0.5).empty());
}

TEST_CASE("selection is invariant under strictly increasing maps and nested in tau") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_vector(rng, 1 + rng() % 60);
    const double a = std::uniform_real_distribution<double>(0.1, 5)(rng);
    std::vector<double> mapped;
    for (double x : v) mapped.push_back(std::exp(a * x) + x);
    CHECK(select_top(mapped, 0.5) == select_top(v, 0.5));
    const auto r25 = select_top(v, 0.25), r50 = select_top(v, 0.5), r75 = select_top(v, 0.75);
    CHECK(std::includes(r50.begin(), r50.end(), r25.begin(), r25.end()));
    CHECK(std::includes(r75.begin(), r75.end(), r50.begin(), r50.end()));
  }
}

TEST_CASE("reconstruction keeps separators between adjacent survivors") {
  const std::string text = "in  a\tbarn near\na farmhouse";
  const auto words = segment_words(text);
  CHECK(reconstruct(text, words, std::vector<std::size_t>{0, 1, 2}) == "in  a\tbarn");
  CHECK(reconstruct(text, words, std::vector<std::size_t>{0, 2, 5}) == "in barn farmhouse");
  CHECK(reconstruct(text, words, std::vector<std::size_t>{3, 4}) == "near\na");
  CHECK(reconstruct(text, words, std::vector<std::size_t>{}).empty());
}

TEST_CASE("single-pass compression with a mock scorer") {
  MockScorer mock({{"the", 0.0}, {"thief", 1.0}, {"hid", 0.5}, {"jewels", 3.0}, {"in", 4.0}, {"a", 4.0},
                   {"barn.", 4.0}});
  CompressionConfig cfg;
  cfg.tau = 3.0 / 8.0;
  cfg.sigma = 0.0;
  const QARecord rec{"r", "the thief hid the jewels in a barn.", "where?", {"in a barn"}};
  const auto result = compress(rec, mock, cfg);
  CHECK(result.compressed_text == "in a barn.");
  CHECK(result.retained_word_indices == std::vector<std::size_t>{5, 6, 7});
  CHECK(result.word_count == 8);
  CHECK(result.achieved_ratio == doctest::Approx(3.0 / 8.0));
  CHECK(result.word_scores_raw.stage == ScoreStage::Word);
  CHECK(std::accumulate(result.word_scores_raw.values.begin(), result.word_scores_raw.values.end(), 0.0) ==
        doctest::Approx(1.0));
  CHECK(result.provenance.scorer == "mock");

  cfg.tau = 2.0;
  CHECK_THROWS_AS(compress(rec, mock, cfg), ConfigError);
  CHECK_THROWS_AS(compress({"r", "", "q", {}}, mock, CompressionConfig{}), InvalidRecordError);
}

TEST_CASE("tau = 1 keeps the whole context") {
  RandomScorer rnd(3);
  CompressionConfig cfg;
  cfg.tau = 1.0;
  const QARecord rec{"r", "one  two\tthree four", "q", {}};
  CHECK(compress(rec, rnd, cfg).compressed_text == rec.context);
}
