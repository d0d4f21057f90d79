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

#include "crossprune/dataset_io.hpp"

#include "crossprune/error.hpp"

namespace crossprune {

namespace {

const nlohmann::json* lookup(const nlohmann::json& j, const std::string& key) {
  if (key.starts_with('/')) {
    const nlohmann::json::json_pointer ptr(key);
    return j.contains(ptr) ? &j.at(ptr) : nullptr;
  }
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

std::string required_string(const nlohmann::json& j, const std::string& key, std::size_t line) {
  const auto* v = lookup(j, key);
  if (!v) throw DatasetError(line, "missing field '" + key + "'");
  if (!v->is_string()) throw DatasetError(line, "field '" + key + "' must be a string");
  return v->get<std::string>();
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

}  // namespace

FieldMap parse_field_map(std::string_view text) {
  FieldMap map;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto item = text.substr(pos, end - pos);
    pos = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size())
      throw ConfigError("fields", "field map entries look like name=key, got '" + std::string(item) + "'");
    const auto name = item.substr(0, eq);
    const std::string key(item.substr(eq + 1));
    if (name == "id") map.id = key;
    else if (name == "context") map.context = key;
    else if (name == "question") map.question = key;
    else if (name == "answers") map.answers = key;
    else throw ConfigError("fields", "unknown field '" + std::string(name) + "': expected id, context, question or answers");
  }
  return map;
}

QARecord record_from_json(const nlohmann::json& j, const FieldMap& fields, std::size_t line) {
  if (!j.is_object()) throw DatasetError(line, "line is not a JSON object");
  QARecord r;
  try {
    r.context = required_string(j, fields.context, line);
    r.query = required_string(j, fields.question, line);
    if (const auto* id = lookup(j, fields.id)) {
      if (id->is_string()) r.id = id->get<std::string>();
      else if (id->is_number_integer()) r.id = std::to_string(id->get<long long>());
      else throw DatasetError(line, "field '" + fields.id + "' must be a string or integer");
    } else {
      r.id = "line-" + std::to_string(line);
    }
    if (const auto* a = lookup(j, fields.answers)) {
      const nlohmann::json* list = a;
      if (a->is_object()) {
        if (!a->contains("text")) throw DatasetError(line, "field '" + fields.answers + "' object lacks 'text'");
        list = &a->at("text");
      }
      if (list->is_string()) {
        r.answers.push_back(list->get<std::string>());
      } else if (list->is_array()) {
        for (const auto& x : *list) {
          if (!x.is_string()) throw DatasetError(line, "field '" + fields.answers + "' must hold strings");
          r.answers.push_back(x.get<std::string>());
        }
      } else if (!list->is_null()) {
        throw DatasetError(line, "field '" + fields.answers + "' must be a string or a list of strings");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(line, e.what());
  }
  if (blank(r.context)) throw DatasetError(line, "field '" + fields.context + "' is empty");
  if (blank(r.query)) throw DatasetError(line, "field '" + fields.question + "' is empty");
  return r;
}

JsonlReader::JsonlReader(const std::filesystem::path& path, FieldMap fields, bool strict)
    : in_(path, std::ios::binary), path_(path.string()), fields_(std::move(fields)), strict_(strict) {
  if (!in_) throw DatasetError(0, "cannot open dataset '" + path_ + "'");
}

std::optional<QARecord> JsonlReader::next() {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (blank(buffer_)) continue;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(buffer_);
      } catch (const nlohmann::json::parse_error& e) {
        throw DatasetError(line_, std::string("invalid JSON: ") + e.what());
      }
      return record_from_json(j, fields_, line_);
    } catch (const DatasetError& e) {
      if (strict_) throw;
      ++malformed_count_;
      if (malformed_.size() < kMaxStoredProblems) malformed_.push_back({line_, e.what()});
    }
  }
  if (in_.bad()) throw DatasetError(line_, "read error in '" + path_ + "'");
  return std::nullopt;
}

std::vector<QARecord> load_jsonl(const std::filesystem::path& path, const FieldMap& fields, bool strict,
                                 std::vector<MalformedLine>* malformed) {
  JsonlReader reader(path, fields, strict);
  std::vector<QARecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  if (malformed) *malformed = reader.malformed();
  return out;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()) {
  if (!out_) throw WriteError(0, "cannot open '" + path_ + "' for writing");
}

void JsonlWriter::write(nlohmann::json object, std::string_view kind) {
  object["schema_version"] = kResultSchemaVersion;
  object["kind"] = std::string(kind);
  out_ << object.dump() << '\n';
  if (!out_) throw WriteError(count_, "write to '" + path_ + "' failed after " + std::to_string(count_) + " lines");
  ++count_;
}

void JsonlWriter::close() {
  out_.flush();
  if (!out_) throw WriteError(count_, "flush of '" + path_ + "' failed after " + std::to_string(count_) + " lines");
  out_.close();
}

std::size_t write_results(const std::filesystem::path& path, std::span<const CompressionResult> results) {
  JsonlWriter w(path);
  for (const auto& r : results) w.write(r);
  w.close();
  return w.count();
}

std::size_t write_reports(const std::filesystem::path& path, std::span<const EvalReport> reports) {
  JsonlWriter w(path);
  for (const auto& r : reports) w.write(r);
  w.close();
  return w.count();
}

std::vector<nlohmann::json> read_jsonl_objects(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(0, "cannot open '" + path.string() + "'");
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError(n, std::string("invalid JSON: ") + e.what());
    }
  }
  return out;
}

std::vector<CompressionResult> read_results(const std::filesystem::path& path) {
  std::vector<CompressionResult> out;
  std::size_t n = 0;
  for (const auto& j : read_jsonl_objects(path)) {
    ++n;
    if (j.value("kind", std::string()) != "compression_result") continue;
    if (j.value("schema_version", 0) != kResultSchemaVersion)
      throw DatasetError(n, "unsupported schema_version " + j.value("schema_version", nlohmann::json()).dump());
    out.push_back(result_from_json(j));
  }
  return out;
}

}  // namespace crossprune
