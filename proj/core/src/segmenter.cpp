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

#include "crossprune/segmenter.hpp"

#include <algorithm>

#include "crossprune/error.hpp"

namespace crossprune {

std::vector<WordSpan> segment_words(std::string_view text) {
  std::vector<WordSpan> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    words.push_back(WordSpan{words.size(), start, i, std::string(text.substr(start, i - start))});
  }
  return words;
}

Alignment align(std::string_view text, std::span<const TokenSpan> tokens, std::span<const WordSpan> words) {
  Alignment out;
  out.word_of_token.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (tok.char_end > text.size() || tok.char_start > tok.char_end)
      throw AlignmentError("token " + std::to_string(tok.token_index) + " has offsets [" +
                           std::to_string(tok.char_start) + "," + std::to_string(tok.char_end) +
                           ") outside the text of length " + std::to_string(text.size()));
    if (tok.empty()) {
      out.word_of_token.emplace_back(std::nullopt);
      continue;
    }
    const auto covered = text.substr(tok.char_start, tok.char_end - tok.char_start);
    if (std::all_of(covered.begin(), covered.end(), is_space)) {
      out.word_of_token.emplace_back(std::nullopt);
      continue;
    }
    // First word whose end lies past the token start.
    auto it = std::upper_bound(words.begin(), words.end(), tok.char_start,
                               [](std::size_t pos, const WordSpan& w) { return pos < w.char_end; });
    std::optional<std::size_t> best;
    std::size_t best_overlap = 0;
    for (; it != words.end() && it->char_start < tok.char_end; ++it) {
      const std::size_t lo = std::max(it->char_start, tok.char_start);
      const std::size_t hi = std::min(it->char_end, tok.char_end);
      const std::size_t overlap = hi > lo ? hi - lo : 0;
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best = it->index;
      }
    }
    if (!best)
      throw AlignmentError("token " + std::to_string(tok.token_index) + " [" + std::to_string(tok.char_start) + "," +
                           std::to_string(tok.char_end) + ") overlaps no word");
    out.word_of_token.emplace_back(best);
  }
  return out;
}

std::string join_words(std::span<const WordSpan> words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w.text;
  }
  return out;
}

}  // namespace crossprune
