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

// Long contexts: split into word-aligned chunks of at most chunk_size tokens.
//
// Strategy 1 compresses every chunk on its own at the same tau and joins the
// pieces. Strategy 2 scores every chunk, merges the raw token scores into one
// vector and runs normalization, smoothing and selection over the whole
// context.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "crossprune/config.hpp"
#include "crossprune/scorer.hpp"
#include "crossprune/segmenter.hpp"

namespace crossprune {

struct Chunk {
  std::size_t index = 0;
  std::size_t word_begin = 0;  // [word_begin, word_end) into the context words
  std::size_t word_end = 0;
  std::size_t char_begin = 0;  // first byte of the first word
  std::size_t char_end = 0;    // one past the last byte of the last word
  std::size_t token_count = 0;

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

/// Greedy packing of whole words into chunks of at most `chunk_size` tokens.
/// Unaligned tokens count towards the word that follows them. Throws
/// ChunkError when a single word needs more than `chunk_size` tokens.
std::vector<Chunk> make_chunks(std::string_view context, std::span<const TokenSpan> tokens,
                               std::span<const WordSpan> words, std::size_t chunk_size);

CompressionResult compress_strategy1(const QARecord& record, Scorer& scorer, const CompressionConfig& cfg);
CompressionResult compress_strategy2(const QARecord& record, Scorer& scorer, const CompressionConfig& cfg);

}  // namespace crossprune
