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

#include "crossprune/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "crossprune/error.hpp"

namespace crossprune {

using nlohmann::json;

namespace {

const json* find_metaspace(const json& node) {
  if (!node.is_object()) return nullptr;
  if (node.value("type", "") == "Metaspace") return &node;
  if (node.contains("pretokenizers"))
    for (const auto& child : node.at("pretokenizers"))
      if (const auto* found = find_metaspace(child)) return found;
  return nullptr;
}

std::size_t utf8_length_at(std::string_view s, std::size_t pos) {
  return std::min(utf8_length(static_cast<unsigned char>(s[pos])), s.size() - pos);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void check_input(std::string_view text, std::size_t limit) {
  if (text.empty()) throw TokenizerError("cannot tokenize empty text");
  if (text.size() > limit)
    throw TokenizerError("input of " + std::to_string(text.size()) + " bytes exceeds the tokenizer limit of " +
                         std::to_string(limit) + " bytes");
}

}  // namespace

UnigramTokenizer UnigramTokenizer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open tokenizer file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

UnigramTokenizer UnigramTokenizer::from_json_text(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ArtifactError(std::string("tokenizer definition is not valid JSON: ") + e.what());
  }
  try {
    return from_document(doc);
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("malformed tokenizer definition: ") + e.what());
  }
}

UnigramTokenizer UnigramTokenizer::from_document(const nlohmann::json& doc) {
  const auto& model = doc.at("model");
  if (model.value("type", "") != "Unigram")
    throw ArtifactError("unsupported tokenizer model '" + model.value("type", "?") + "' (expected Unigram)");
  if (model.value("byte_fallback", false)) throw ArtifactError("byte_fallback unigram tokenizers are not supported");

  UnigramTokenizer tok;
  const auto& vocab = model.at("vocab");
  tok.pieces_.reserve(vocab.size());
  tok.scores_.reserve(vocab.size());
  double min_score = std::numeric_limits<double>::infinity();
  for (const auto& entry : vocab) {
    tok.pieces_.push_back(entry.at(0).get<std::string>());
    tok.scores_.push_back(entry.at(1).get<double>());
    min_score = std::min(min_score, tok.scores_.back());
  }
  if (tok.pieces_.empty()) throw ArtifactError("tokenizer vocabulary is empty");
  tok.unk_score_ = min_score - 10.0;
  tok.unk_id_ = model.value("unk_id", 0);
  tok.special_.assign(tok.pieces_.size(), false);
  for (std::size_t id = 0; id < tok.pieces_.size(); ++id) {
    tok.index_.emplace(tok.pieces_[id], static_cast<std::int64_t>(id));
    tok.max_piece_bytes_ = std::max(tok.max_piece_bytes_, tok.pieces_[id].size());
  }
  if (doc.contains("added_tokens") && doc.at("added_tokens").is_array())
    for (const auto& added : doc.at("added_tokens"))
      if (added.value("special", false)) {
        const auto id = added.at("id").get<std::size_t>();
        if (id < tok.special_.size()) tok.special_[id] = true;
      }
  for (const char* name : {"<pad>", "</s>", "<unk>"})
    if (auto it = tok.index_.find(name); it != tok.index_.end()) tok.special_[static_cast<std::size_t>(it->second)] = true;
  if (auto it = tok.index_.find("</s>"); it != tok.index_.end()) tok.eos_id_ = it->second;

  if (doc.contains("pre_tokenizer")) {
    if (const auto* meta = find_metaspace(doc.at("pre_tokenizer"))) {
      tok.replacement_ = meta->value("replacement", tok.replacement_);
      if (meta->contains("prepend_scheme"))
        tok.prepend_first_ = meta->at("prepend_scheme").get<std::string>() != "never";
      else
        tok.prepend_first_ = meta->value("add_prefix_space", true);
    }
  }
  return tok;
}

void UnigramTokenizer::encode_word(std::string_view word, std::size_t word_start, bool add_prefix,
                                   std::vector<TokenSpan>& out) const {
  const std::string normalized = (add_prefix ? replacement_ : std::string()) + std::string(word);
  const std::size_t prefix = add_prefix ? replacement_.size() : 0;
  const std::size_t n = normalized.size();

  struct Node {
    double score = 0.0;
    std::size_t start = 0;
    std::int64_t id = -1;
    bool reached = false;
  };
  std::vector<Node> best(n + 1);
  best[0].reached = true;

  for (std::size_t pos = 0; pos < n; pos = pos + utf8_length_at(normalized, pos)) {
    if (!best[pos].reached) continue;
    const std::size_t first_char = utf8_length_at(normalized, pos);
    bool has_single_char_piece = false;
    for (std::size_t len = first_char; len <= max_piece_bytes_ && pos + len <= n;
         len += utf8_length_at(normalized, pos + len)) {
      auto it = index_.find(normalized.substr(pos, len));
      if (it != index_.end() && !special_[static_cast<std::size_t>(it->second)]) {
        if (len == first_char) has_single_char_piece = true;
        const double candidate = best[pos].score + scores_[static_cast<std::size_t>(it->second)];
        Node& target = best[pos + len];
        if (!target.reached || candidate > target.score) target = Node{candidate, pos, it->second, true};
      }
      if (pos + len == n) break;
    }
    if (!has_single_char_piece) {
      const double candidate = best[pos].score + unk_score_;
      Node& target = best[pos + first_char];
      if (!target.reached || candidate > target.score) target = Node{candidate, pos, unk_id_, true};
    }
  }

  struct Piece {
    std::size_t start;
    std::size_t end;
    std::int64_t id;
  };
  std::vector<Piece> path;
  for (std::size_t end = n; end > 0; end = best[end].start) path.push_back({best[end].start, end, best[end].id});
  std::reverse(path.begin(), path.end());

  auto to_original = [&](std::size_t p) { return word_start + (std::max(p, prefix) - prefix); };
  for (std::size_t i = 0; i < path.size(); ++i) {
    const std::size_t start = path[i].start;
    std::size_t end = path[i].end;
    // consecutive unknown characters fuse into one token
    while (path[i].id == unk_id_ && i + 1 < path.size() && path[i + 1].id == unk_id_) end = path[++i].end;
    out.push_back(TokenSpan{out.size(), path[i].id, to_original(start), to_original(end)});
  }
}

std::vector<TokenSpan> UnigramTokenizer::tokenize(std::string_view text) const {
  check_input(text, kMaxInputBytes);
  std::vector<TokenSpan> out;
  const auto words = segment_words(text);
  for (const auto& w : words) encode_word(w.text, w.char_start, w.index > 0 || prepend_first_, out);
  return out;
}

std::string UnigramTokenizer::decode(std::span<const std::int64_t> ids) const {
  std::string joined;
  for (auto id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size())
      throw TokenizerError("token id " + std::to_string(id) + " outside the vocabulary");
    if (special_[static_cast<std::size_t>(id)] && id != unk_id_) continue;
    joined += pieces_[static_cast<std::size_t>(id)];
  }
  std::string out;
  for (std::size_t pos = 0; pos < joined.size();) {
    if (joined.compare(pos, replacement_.size(), replacement_) == 0) {
      out += ' ';
      pos += replacement_.size();
    } else {
      out += joined[pos++];
    }
  }
  if (!out.empty() && out.front() == ' ') out.erase(out.begin());
  return out;
}

std::vector<TokenSpan> WhitespaceTokenizer::tokenize(std::string_view text) const {
  check_input(text, UnigramTokenizer::kMaxInputBytes);
  std::vector<TokenSpan> out;
  for (const auto& w : segment_words(text)) {
    std::size_t pos = 0;
    while (pos < w.text.size()) {
      std::size_t len = 0;
      while (pos + len < w.text.size()) {
        const std::size_t step = utf8_length_at(w.text, pos + len);
        if (len > 0 && len + step > max_piece_bytes_) break;
        len += step;
      }
      const auto piece = std::string_view(w.text).substr(pos, len);
      out.push_back(TokenSpan{out.size(), static_cast<std::int64_t>(fnv1a(piece) >> 1), w.char_start + pos,
                              w.char_start + pos + len});
      pos += len;
    }
  }
  return out;
}

}  // namespace crossprune
