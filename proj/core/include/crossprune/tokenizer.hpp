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

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "crossprune/segmenter.hpp"

namespace crossprune {

/// Splits text into backend tokens with byte offsets into the input.
///
/// Tokenization never crosses whitespace, so the tokens of a substring that
/// starts and ends on word boundaries equal the corresponding tokens of the
/// full text. The chunking strategies rely on this.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  /// Content tokens only; no end-of-sequence marker. Throws TokenizerError on
  /// empty input or input above the absolute size limit.
  virtual std::vector<TokenSpan> tokenize(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// SentencePiece-style unigram tokenizer loaded from a `tokenizer.json`
/// (Unigram model, Metaspace pre-tokenizer). Whitespace runs are collapsed
/// before segmentation; the charsmap normalizer of some exports is not
/// applied, so non-ASCII compatibility forms may tokenize differently.
class UnigramTokenizer final : public Tokenizer {
 public:
  static constexpr std::size_t kMaxInputBytes = std::size_t{1} << 26;

  static UnigramTokenizer from_file(const std::filesystem::path& path);
  static UnigramTokenizer from_json_text(std::string_view json_text);

  std::vector<TokenSpan> tokenize(std::string_view text) const override;
  std::string name() const override { return "unigram"; }

  /// Joins pieces, maps the metaspace marker back to spaces and drops the
  /// leading space. Special tokens are skipped.
  std::string decode(std::span<const std::int64_t> ids) const;

  std::int64_t eos_id() const noexcept { return eos_id_; }
  std::int64_t unk_id() const noexcept { return unk_id_; }
  std::size_t vocab_size() const noexcept { return pieces_.size(); }
  const std::string& piece(std::int64_t id) const { return pieces_.at(static_cast<std::size_t>(id)); }

 private:
  UnigramTokenizer() = default;
  static UnigramTokenizer from_document(const nlohmann::json& doc);
  void encode_word(std::string_view word, std::size_t word_start, bool add_prefix,
                   std::vector<TokenSpan>& out) const;

  std::vector<std::string> pieces_;
  std::vector<double> scores_;
  std::vector<bool> special_;
  std::unordered_map<std::string, std::int64_t> index_;
  std::size_t max_piece_bytes_ = 0;
  double unk_score_ = 0.0;
  std::int64_t unk_id_ = 0;
  std::int64_t eos_id_ = -1;
  std::string replacement_ = "\xE2\x96\x81";  // U+2581
  bool prepend_first_ = true;
};

/// One token per whitespace word, or pieces of at most `max_piece_bytes`
/// bytes (split on UTF-8 character boundaries). Token ids are stable hashes
/// of the piece text. Used by the mock and random scorers and in tests.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  explicit WhitespaceTokenizer(std::size_t max_piece_bytes = std::numeric_limits<std::size_t>::max())
      : max_piece_bytes_(max_piece_bytes == 0 ? 1 : max_piece_bytes) {}

  std::vector<TokenSpan> tokenize(std::string_view text) const override;
  std::string name() const override { return "whitespace"; }

 private:
  std::size_t max_piece_bytes_;
};

/// Byte length of the UTF-8 sequence introduced by `lead` (1 for invalid bytes).
constexpr std::size_t utf8_length(unsigned char lead) noexcept {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace crossprune
