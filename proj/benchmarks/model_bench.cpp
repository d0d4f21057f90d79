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

#include <benchmark/benchmark.h>

#include "crossprune/pipeline.hpp"
#include "synthetic.hpp"

namespace {

using namespace crossprune;

std::shared_ptr<const T5Model> tiny() {
  static const auto m = T5Model::load(crossprune::testing::tiny_model_dir());
  return m;
}

std::string context_of(std::size_t words) {
  std::string text;
  for (std::size_t i = 0; i < words; ++i) text += (i % 4 == 0 ? "the barn " : "key in ");
  return text;
}

void BM_Tokenize(benchmark::State& state) {
  const auto text = context_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tiny()->tokenizer().tokenize(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Tokenize)->Arg(50)->Arg(500);

void BM_CrossFirstScore(benchmark::State& state) {
  CrossAttentionScorer scorer(tiny(), {}, CrossAttentionScorer::Mode::FirstStep);
  const AttentionRequest req{context_of(static_cast<std::size_t>(state.range(0))), "Where is the key?", std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(scorer.score(req));
}
BENCHMARK(BM_CrossFirstScore)->Arg(10)->Arg(40);

void BM_CompressTiny(benchmark::State& state) {
  CrossAttentionScorer scorer(tiny(), {}, CrossAttentionScorer::Mode::FirstStep);
  const QARecord rec{"b", context_of(100), "Where is the key?", {"barn"}};
  CompressionConfig cfg;
  cfg.strategy = Strategy::Chunked2;
  cfg.chunk_size = 128;
  for (auto _ : state) benchmark::DoNotOptimize(compress(rec, scorer, cfg));
}
BENCHMARK(BM_CompressTiny);

}  // namespace
