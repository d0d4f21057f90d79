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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "crossprune/error.hpp"
#include "crossprune/report.hpp"

using namespace crossprune;

namespace {

EvalReport mrr_report(const std::string& scorer, std::vector<double> values) {
  EvalReport r;
  r.metric = Metric::MRR;
  r.scorer = scorer;
  for (std::size_t i = 0; i < values.size(); ++i) r.record_ids.push_back("id," + std::to_string(i));
  r.per_example = std::move(values);
  finalize(r);
  return r;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("numbers use a fixed format") {
  CHECK(format_number(0.5) == "0.500000");
  CHECK(format_number(1.0 / 3.0) == "0.333333");
}

TEST_CASE("per-example CSV quotes awkward ids") {
  auto r = mrr_report("random", {0.25, 1.0});
  r.failed = {false, true};
  finalize(r);
  CHECK(to_csv(r) == "record_id,MRR,failed\n\"id,0\",0.250000,0\n\"id,1\",1.000000,1\n");
}

TEST_CASE("MRR table lists failures next to successes") {
  const std::vector<MrrOutcome> outcomes{{"cross-first", mrr_report("cross-first", {0.5, 1.0}), ""},
                                         {"self-info", std::nullopt, "no model"}};
  CHECK(mrr_table_csv(outcomes) == "scorer,mean_mrr,records,excluded,error\ncross-first,0.750000,2,0,\n"
                                   "self-info,,,,no model\n");
  const auto j = mrr_table_json(outcomes);
  CHECK(j.at("scorers")[0].at("mean_mrr") == 0.75);
  CHECK(j.at("scorers")[1].at("error") == "no model");
}

TEST_CASE("sweep CSV has one row per sigma and the overlap matrix") {
  SweepReport s;
  s.sigmas = {1.0, 2.0};
  s.window_k = {3, 6};
  s.coverage = {0.5, 0.25};
  s.overlap = {{1.0, 0.5}, {0.5, 1.0}};
  CHECK(to_csv(s) == "sigma,window_k,coverage,overlap_sigma_1.000000,overlap_sigma_2.000000\n"
                     "1.000000,3,0.500000,1.000000,0.500000\n2.000000,6,0.250000,0.500000,1.000000\n");
  const auto svg = sweep_line_chart(s);
  CHECK(svg.starts_with("<svg"));
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count_of(svg, "<polyline") >= 1);
}

TEST_CASE("charts are deterministic and escape labels") {
  const std::vector<std::string> labels{"a<b", "c&d"};
  const std::vector<double> values{0.2, 0.9};
  const auto first = svg_bar_chart("T", labels, values, "MRR");
  CHECK(first == svg_bar_chart("T", labels, values, "MRR"));
  CHECK(first.find("a&lt;b") != std::string::npos);
  CHECK(first.find("c&amp;d") != std::string::npos);
  CHECK(first.find("a<b") == std::string::npos);

  const std::vector<MrrOutcome> outcomes{{"random", mrr_report("random", {0.1}), ""}, {"broken", std::nullopt, "x"}};
  CHECK(mrr_bar_chart(outcomes).find("random") != std::string::npos);
}

TEST_CASE("text files are written or fail loudly") {
  const auto path = std::filesystem::temp_directory_path() / "crossprune_report.csv";
  write_text_file(path, "a,b\n");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "a,b\n");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(write_text_file(std::filesystem::temp_directory_path() / "no_such_dir" / "x.csv", "x"), WriteError);
}
