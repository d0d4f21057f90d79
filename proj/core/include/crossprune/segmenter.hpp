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

// Word units over raw text and token-to-word alignment by character offsets.
// All offsets are byte offsets into the UTF-8 text.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crossprune {

/// A maximal run of non-whitespace characters.
struct WordSpan {
  std::size_t index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;  // exclusive
  std::string text;

  std::size_t length() const noexcept { return char_end - char_start; }
  friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

/// A backend token with its character span. Special tokens have empty spans.
struct TokenSpan {
  std::size_t token_index = 0;
  std::int64_t token_id = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool empty() const noexcept { return char_end <= char_start; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct Alignment {
  /// word_of_token[t] is the word index of token t, or nullopt for special
  /// and pure-whitespace tokens.
  std::vector<std::optional<std::size_t>> word_of_token;

  std::size_t token_count() const noexcept { return word_of_token.size(); }
};

/// ASCII whitespace classification used for word boundaries.
constexpr bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

/// Splits text into maximal non-whitespace runs; punctuation stays attached.
std::vector<WordSpan> segment_words(std::string_view text);

/// Maps each token to the word it overlaps most (earlier word on ties).
/// Throws AlignmentError if a token with non-whitespace content overlaps no
/// word, or if its offsets fall outside `text`.
Alignment align(std::string_view text, std::span<const TokenSpan> tokens, std::span<const WordSpan> words);

/// Word texts joined with single spaces.
std::string join_words(std::span<const WordSpan> words);

}  // namespace crossprune
