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

// Line-delimited JSON datasets and result files.
//
// Input lines are standalone objects; the field map says which keys hold the
// id, context, question and answers (a key starting with '/' is a JSON
// pointer). Answers may be a string, a list of strings, or an object with a
// "text" list. Output lines carry "schema_version" and "kind".

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crossprune/config.hpp"
#include "crossprune/evaluation.hpp"

namespace crossprune {

inline constexpr int kResultSchemaVersion = 1;

struct FieldMap {
  std::string id = "id";
  std::string context = "context";
  std::string question = "question";
  std::string answers = "answers";

  friend bool operator==(const FieldMap&, const FieldMap&) = default;
};

/// Parses "question=query,context=passage". Unknown targets throw ConfigError.
FieldMap parse_field_map(std::string_view text);

struct MalformedLine {
  std::size_t line = 0;
  std::string message;
};

/// Streams records one line at a time; memory does not grow with file length.
class JsonlReader {
 public:
  static constexpr std::size_t kMaxStoredProblems = 1000;

  /// Throws DatasetError when the file cannot be opened.
  explicit JsonlReader(const std::filesystem::path& path, FieldMap fields = {}, bool strict = false);

  /// Next valid record, or nullopt at end of file. Malformed lines are
  /// recorded and skipped; in strict mode the first one throws DatasetError.
  std::optional<QARecord> next();

  std::size_t line_number() const noexcept { return line_; }
  std::size_t malformed_count() const noexcept { return malformed_count_; }
  /// The first kMaxStoredProblems malformed lines.
  const std::vector<MalformedLine>& malformed() const noexcept { return malformed_; }

 private:
  std::ifstream in_;
  std::string path_;
  FieldMap fields_;
  bool strict_;
  std::size_t line_ = 0;
  std::size_t malformed_count_ = 0;
  std::vector<MalformedLine> malformed_;
  std::string buffer_;
};

/// Converts one parsed line to a record. Throws DatasetError(line, ...).
QARecord record_from_json(const nlohmann::json& j, const FieldMap& fields, std::size_t line);

/// Reads a whole file into memory (convenience for small datasets).
std::vector<QARecord> load_jsonl(const std::filesystem::path& path, const FieldMap& fields = {}, bool strict = false,
                                 std::vector<MalformedLine>* malformed = nullptr);

/// Appends one object per line. Every write adds "schema_version" and "kind".
class JsonlWriter {
 public:
  /// Truncates `path`. Throws WriteError when it cannot be opened.
  explicit JsonlWriter(const std::filesystem::path& path);

  void write(nlohmann::json object, std::string_view kind);
  void write(const CompressionResult& result) { write(to_json(result), "compression_result"); }
  void write(const EvalReport& report) { write(to_json(report), "eval_report"); }

  /// Flushes; throws WriteError carrying the number of lines written.
  void close();
  std::size_t count() const noexcept { return count_; }

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t count_ = 0;
};

std::size_t write_results(const std::filesystem::path& path, std::span<const CompressionResult> results);
std::size_t write_reports(const std::filesystem::path& path, std::span<const EvalReport> reports);

/// Reads back every line of a results file (all kinds) as JSON objects.
std::vector<nlohmann::json> read_jsonl_objects(const std::filesystem::path& path);
std::vector<CompressionResult> read_results(const std::filesystem::path& path);

}  // namespace crossprune
