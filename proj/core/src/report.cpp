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

#include "crossprune/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "crossprune/error.hpp"

namespace crossprune {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 20, kTop = 50, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

// Frame, title, axis labels and a 0..1 y grid.
void begin_plot(std::ostringstream& svg, const std::string& title, const std::string& x_label,
                const std::string& y_label) {
  const double plot_h = kHeight - kTop - kBottom;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << px(kWidth / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">" << esc(title)
      << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    const double y = kTop + plot_h * (1.0 - v);
    svg << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(y) << "\" x2=\"" << px(kWidth - kRight) << "\" y2=\""
        << px(y) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(y + 4) << "\" text-anchor=\"end\">" << format_number(v)
        << "</text>\n";
  }
  svg << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(kTop) << "\" x2=\"" << px(kLeft) << "\" y2=\""
      << px(kHeight - kBottom) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(kHeight - kBottom) << "\" x2=\"" << px(kWidth - kRight)
      << "\" y2=\"" << px(kHeight - kBottom) << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << px((kLeft + kWidth - kRight) / 2) << "\" y=\"" << px(kHeight - 15)
      << "\" text-anchor=\"middle\">" << esc(x_label) << "</text>\n"
      << "<text x=\"18\" y=\"" << px(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << px(kTop + plot_h / 2) << ")\">" << esc(y_label) << "</text>\n";
}

double y_of(double v) {
  const double plot_h = kHeight - kTop - kBottom;
  return kTop + plot_h * (1.0 - std::clamp(v, 0.0, 1.0));
}

}  // namespace

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

std::string to_csv(const EvalReport& r) {
  std::string out = "record_id," + to_string(r.metric) + ",failed\n";
  for (std::size_t i = 0; i < r.per_example.size(); ++i) {
    const std::string id = i < r.record_ids.size() ? r.record_ids[i] : std::to_string(i);
    const bool failed = i < r.failed.size() && r.failed[i];
    out += csv_cell(id) + "," + format_number(r.per_example[i]) + "," + (failed ? "1" : "0") + "\n";
  }
  return out;
}

std::string to_csv(const SweepReport& r) {
  std::string out = "sigma,window_k,coverage";
  for (double s : r.sigmas) out += ",overlap_sigma_" + format_number(s);
  out += '\n';
  for (std::size_t i = 0; i < r.sigmas.size(); ++i) {
    out += format_number(r.sigmas[i]) + "," + std::to_string(r.window_k[i]) + "," + format_number(r.coverage[i]);
    for (double v : r.overlap[i]) out += "," + format_number(v);
    out += '\n';
  }
  return out;
}

nlohmann::json mrr_table_json(std::span<const MrrOutcome> outcomes) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& o : outcomes) {
    nlohmann::json row = {{"scorer", o.scorer}};
    if (o.report) {
      row["mean_mrr"] = o.report->aggregate;
      row["records"] = o.report->per_example.size();
      row["excluded"] = o.report->excluded.size();
      row["report"] = to_json(*o.report);
    } else {
      row["error"] = o.error;
    }
    rows.push_back(std::move(row));
  }
  return {{"metric", "MRR"}, {"scorers", rows}};
}

std::string mrr_table_csv(std::span<const MrrOutcome> outcomes) {
  std::string out = "scorer,mean_mrr,records,excluded,error\n";
  for (const auto& o : outcomes) {
    out += csv_cell(o.scorer) + ",";
    if (o.report)
      out += format_number(o.report->aggregate) + "," + std::to_string(o.report->per_example.size()) + "," +
             std::to_string(o.report->excluded.size()) + ",\n";
    else
      out += ",,," + csv_cell(o.error) + "\n";
  }
  return out;
}

std::string svg_bar_chart(const std::string& title, std::span<const std::string> labels,
                          std::span<const double> values, const std::string& y_label) {
  std::ostringstream svg;
  begin_plot(svg, title, "", y_label);
  const double plot_w = kWidth - kLeft - kRight;
  const double slot = labels.empty() ? plot_w : plot_w / static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = i < values.size() ? values[i] : 0.0;
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.2;
    const double y = y_of(v);
    svg << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(slot * 0.6) << "\" height=\""
        << px(kHeight - kBottom - y) << "\" fill=\"" << kPalette[i % 6] << "\"/>\n"
        << "<text x=\"" << px(x + slot * 0.3) << "\" y=\"" << px(y - 5) << "\" text-anchor=\"middle\">"
        << format_number(v) << "</text>\n"
        << "<text x=\"" << px(x + slot * 0.3) << "\" y=\"" << px(kHeight - kBottom + 18)
        << "\" text-anchor=\"middle\">" << esc(labels[i]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string svg_line_chart(const std::string& title, std::span<const double> x, std::span<const Series> series,
                           const std::string& x_label, const std::string& y_label) {
  std::ostringstream svg;
  begin_plot(svg, title, x_label, y_label);
  const double plot_w = kWidth - kLeft - kRight;
  double lo = x.empty() ? 0.0 : *std::min_element(x.begin(), x.end());
  double hi = x.empty() ? 1.0 : *std::max_element(x.begin(), x.end());
  if (hi <= lo) hi = lo + 1.0;
  auto x_of = [&](double v) { return kLeft + 20 + (plot_w - 40) * (v - lo) / (hi - lo); };
  for (double v : x)
    svg << "<text x=\"" << px(x_of(v)) << "\" y=\"" << px(kHeight - kBottom + 18) << "\" text-anchor=\"middle\">"
        << format_number(v) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % 6];
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < series[s].values.size(); ++i)
      svg << (i ? " " : "") << px(x_of(x[i])) << ',' << px(y_of(series[s].values[i]));
    svg << "\"/>\n";
    for (std::size_t i = 0; i < x.size() && i < series[s].values.size(); ++i)
      svg << "<circle cx=\"" << px(x_of(x[i])) << "\" cy=\"" << px(y_of(series[s].values[i])) << "\" r=\"3\" fill=\""
          << colour << "\"/>\n";
    svg << "<text x=\"" << px(kWidth - kRight - 150) << "\" y=\"" << px(kTop + 16 * static_cast<double>(s + 1))
        << "\" fill=\"" << colour << "\">" << esc(series[s].name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string mrr_bar_chart(std::span<const MrrOutcome> outcomes) {
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& o : outcomes) {
    if (!o.report) continue;
    labels.push_back(o.scorer);
    values.push_back(o.report->aggregate);
  }
  return svg_bar_chart("Mean reciprocal rank of answer tokens", labels, values, "MRR");
}

std::string sweep_line_chart(const SweepReport& r) {
  std::vector<Series> series{{"coverage", r.coverage}, {"overlap with first sigma", {}}};
  for (const auto& row : r.overlap) series[1].values.push_back(row.empty() ? 0.0 : row[0]);
  return svg_line_chart("Smoothing width sweep", r.sigmas, series, "sigma", "value");
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WriteError(0, "cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw WriteError(0, "write to '" + path.string() + "' failed");
}

}  // namespace crossprune
