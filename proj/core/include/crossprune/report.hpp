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

// Report rendering: CSV tables and static SVG plots. Output is a pure
// function of the inputs (no timestamps), so reruns are byte-identical.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossprune/evaluation.hpp"

namespace crossprune {

std::string to_csv(const EvalReport& report);
std::string to_csv(const SweepReport& report);

nlohmann::json mrr_table_json(std::span<const MrrOutcome> outcomes);
std::string mrr_table_csv(std::span<const MrrOutcome> outcomes);

struct Series {
  std::string name;
  std::vector<double> values;
};

/// Vertical bars, one per label; values expected in [0, 1].
std::string svg_bar_chart(const std::string& title, std::span<const std::string> labels,
                          std::span<const double> values, const std::string& y_label);

/// One polyline per series over shared x values; y expected in [0, 1].
std::string svg_line_chart(const std::string& title, std::span<const double> x, std::span<const Series> series,
                           const std::string& x_label, const std::string& y_label);

std::string mrr_bar_chart(std::span<const MrrOutcome> outcomes);
std::string sweep_line_chart(const SweepReport& report);

/// Fixed-format number used in every CSV and JSON table cell.
std::string format_number(double value);

/// Writes `content` atomically enough for reports (truncate + write).
/// Throws WriteError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace crossprune
