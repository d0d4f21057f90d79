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

#include <sys/resource.h>

#include <filesystem>
#include <fstream>

#include "crossprune/dataset_io.hpp"
#include "crossprune/error.hpp"
#include "crossprune/evaluation.hpp"

using namespace crossprune;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  const auto path = fs::temp_directory_path() / ("crossprune_io_" + name);
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

long max_rss_kb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

}  // namespace

TEST_CASE("answer layouts and default ids") {
  const auto path = temp_file("layouts.jsonl",
                              R"({"id": "a", "context": "c1", "question": "q1", "answers": "x"})"
                              "\n"
                              R"({"id": 7, "context": "c2", "question": "q2", "answers": ["x", "y"]})"
                              "\n\n"
                              R"({"context": "c3", "question": "q3", "answers": {"text": ["z"], "answer_start": [0]}})"
                              "\n"
                              R"({"context": "c4", "question": "q4"})"
                              "\n");
  const auto records = load_jsonl(path);
  REQUIRE(records.size() == 4);
  CHECK(records[0] == QARecord{"a", "c1", "q1", {"x"}});
  CHECK(records[1] == QARecord{"7", "c2", "q2", {"x", "y"}});
  CHECK(records[2] == QARecord{"line-4", "c3", "q3", {"z"}});
  CHECK(records[3].answers.empty());
  fs::remove(path);
}

TEST_CASE("field maps rename keys and follow JSON pointers") {
  const auto fields = parse_field_map("question=query,context=/doc/body,answers=gold");
  CHECK(fields.question == "query");
  CHECK(fields.context == "/doc/body");
  CHECK(fields.id == "id");
  CHECK_THROWS_AS(parse_field_map("title=t"), ConfigError);
  CHECK_THROWS_AS(parse_field_map("question"), ConfigError);

  const auto path = temp_file("pointer.jsonl", R"({"id": "p", "doc": {"body": "text"}, "query": "q", "gold": ["g"]})"
                                               "\n");
  const auto records = load_jsonl(path, fields);
  REQUIRE(records.size() == 1);
  CHECK(records[0] == QARecord{"p", "text", "q", {"g"}});
  fs::remove(path);
}

TEST_CASE("malformed lines are skipped with their line numbers, or fatal in strict mode") {
  const auto path = temp_file("bad.jsonl",
                              R"({"id": "1", "context": "c", "question": "q"})"
                              "\n"
                              "{not json\n"
                              R"({"id": "3", "context": "", "question": "q"})"
                              "\n"
                              R"([1, 2])"
                              "\n"
                              R"({"id": "5", "context": "c", "question": "q", "answers": 3})"
                              "\n"
                              R"({"id": "6", "context": "c", "question": "q"})"
                              "\n");
  std::vector<MalformedLine> bad;
  const auto records = load_jsonl(path, {}, false, &bad);
  REQUIRE(records.size() == 2);
  CHECK(records[1].id == "6");
  REQUIRE(bad.size() == 4);
  CHECK(bad[0].line == 2);
  CHECK(bad[1].line == 3);
  CHECK(bad[2].line == 4);
  CHECK(bad[3].line == 5);

  try {
    load_jsonl(path, {}, true);
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(e.line() == 2);
  }
  fs::remove(path);
  CHECK_THROWS_AS(JsonlReader{path}, DatasetError);
}

TEST_CASE("results round trip with schema version and kind") {
  CompressionResult r;
  r.record_id = "r1";
  r.compressed_text = "in a barn";
  r.retained_word_indices = {1, 2, 3};
  r.word_scores_raw = {{0.2, 0.3, 0.3, 0.2}, ScoreStage::Word};
  r.word_scores_smoothed = {{0.25, 0.3, 0.3, 0.25}, ScoreStage::SmoothedWord};
  r.word_count = 4;
  r.achieved_ratio = 0.75;
  r.provenance.scorer = "cross-first";
  auto r2 = r;
  r2.record_id = "r2";

  const auto path = fs::temp_directory_path() / "crossprune_io_results.jsonl";
  {
    JsonlWriter w(path);
    w.write(r);
    EvalReport report;
    report.dataset_id = "d";
    report.per_example = {1.0};
    report.record_ids = {"r1"};
    finalize(report);
    w.write(report);
    w.write(r2);
    w.close();
    CHECK(w.count() == 3);
  }
  const auto objects = read_jsonl_objects(path);
  REQUIRE(objects.size() == 3);
  for (const auto& o : objects) CHECK(o.at("schema_version") == kResultSchemaVersion);
  CHECK(objects[1].at("kind") == "eval_report");
  const auto back = read_results(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == r);
  CHECK(back[1] == r2);

  std::ofstream(path) << R"({"kind": "compression_result", "schema_version": 99})" << "\n";
  CHECK_THROWS_AS(read_results(path), DatasetError);
  fs::remove(path);
  CHECK_THROWS_AS(JsonlWriter{fs::temp_directory_path() / "no_such_dir" / "x.jsonl"}, WriteError);
}

TEST_CASE("reading streams: memory does not grow with the number of lines") {
  const auto path = fs::temp_directory_path() / "crossprune_io_large.jsonl";
  const std::string context(200, 'w');
  {
    std::ofstream out(path);
    for (int i = 0; i < 100000; ++i)
      out << R"({"id": ")" << i << R"(", "context": ")" << context << R"(", "question": "q", "answers": ["w"]})"
          << '\n';
  }
  const auto before = max_rss_kb();
  JsonlReader reader(path);
  std::size_t n = 0, bytes = 0;
  while (auto r = reader.next()) {
    ++n;
    bytes += r->context.size();
  }
  const auto growth = max_rss_kb() - before;
  CHECK(n == 100000);
  CHECK(bytes == 100000 * context.size());
  CHECK(reader.malformed_count() == 0);
  // The file is about 25 MB; a streaming reader stays far below that.
  CHECK(growth < 8 * 1024);
  fs::remove(path);
}
