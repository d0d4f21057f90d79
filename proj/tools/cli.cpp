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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <variant>

#include <CLI11.hpp>

#include "crossprune/chunking.hpp"
#include "crossprune/dataset_io.hpp"
#include "crossprune/error.hpp"
#include "crossprune/evaluation.hpp"
#include "crossprune/llm_client.hpp"
#include "crossprune/model_artifact.hpp"
#include "crossprune/parallel.hpp"
#include "crossprune/pipeline.hpp"
#include "crossprune/report.hpp"

namespace crossprune::cli {

namespace {

// Thrown for bad flag values that only show up after parsing.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string input;
  std::string output;
  std::string fields;
  std::string dataset_id;
  bool strict = false;
  std::size_t jobs = 0;
  std::uint64_t seed = 0;

  double tau = 0.5;
  double sigma = 1.0;
  int window_k = 3;
  int chunk_size = 512;
  std::string strategy = "single";
  std::string chunk_merge = "global-softmax";
  std::string layers = "all";
  int min_retained = 1;

  std::string scorer = "cross-first";
  std::string scorers = "cross-first,cross-total,self-attn,self-info,random";
  std::string model;
  std::string mock_table;

  std::string sigmas = "1,2,3,4,5";
  std::string metrics = "coverage";
  std::string taus;

  std::string endpoint;
  std::string endpoint_model;
  double timeout = 60.0;
  int max_tokens = 32;
  std::string prompt_file;
  std::string text_path = "/text";
  std::size_t max_in_flight = 4;
  std::string token_env;
  std::string transcript;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text + ",") {
    if (c != ',') {
      item += c;
      continue;
    }
    const auto b = item.find_first_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, item.find_last_not_of(' ') - b + 1));
    item.clear();
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError(flag + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(flag + ": expected a comma-separated list of numbers");
  return out;
}

CompressionConfig compression_config(const Options& o) {
  CompressionConfig c;
  c.tau = o.tau;
  c.sigma = o.sigma;
  c.window_k = o.window_k;
  c.chunk_size = o.chunk_size;
  c.strategy = parse_strategy(o.strategy);
  c.chunk_merge = parse_chunk_merge(o.chunk_merge);
  c.layer_select = parse_layer_select(o.layers);
  c.min_retained = o.min_retained;
  return validate_config(c);
}

std::map<std::string, double> load_mock_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--mock-table: cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in).get<std::map<std::string, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("--mock-table: expected a JSON object of word scores: " + std::string(e.what()));
  }
}

// Loads the model and mock table once; scorers are built per worker.
struct ScorerSetup {
  ScorerOptions options;

  static ScorerSetup from(const Options& o, const CompressionConfig& cfg) {
    ScorerSetup s;
    s.options.layers = cfg.layer_select;
    s.options.seed = o.seed;
    if (!o.model.empty()) s.options.model = T5Model::load(o.model);
    if (!o.mock_table.empty()) s.options.mock_table = load_mock_table(o.mock_table);
    return s;
  }

  ScorerFactory factory(ScorerKind kind) const {
    const auto opts = options;
    return [kind, opts] { return make_scorer(kind, opts); };
  }
};

std::vector<QARecord> read_dataset(const Options& o, std::ostream& err) {
  if (o.input.empty()) throw UsageError("--input is required");
  std::vector<MalformedLine> bad;
  auto records = load_jsonl(o.input, parse_field_map(o.fields), o.strict, &bad);
  if (!bad.empty()) {
    err << "warning: skipped " << bad.size() << " malformed line(s) in " << o.input;
    err << "; first at line " << bad.front().line << ": " << bad.front().message << "\n";
  }
  return records;
}

std::string dataset_id(const Options& o) {
  if (!o.dataset_id.empty()) return o.dataset_id;
  return std::filesystem::path(o.input).stem().string();
}

std::filesystem::path output_dir(const Options& o) {
  if (o.output.empty()) throw UsageError("--output is required");
  std::filesystem::create_directories(o.output);
  return o.output;
}

int cmd_compress(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.output.empty()) throw UsageError("--output is required");
  const auto cfg = compression_config(o);
  const auto setup = ScorerSetup::from(o, cfg);
  const auto make = setup.factory(parse_scorer_kind(o.scorer));
  if (o.input.empty()) throw UsageError("--input is required");

  JsonlReader reader(o.input, parse_field_map(o.fields), o.strict);
  JsonlWriter writer(o.output);
  using Outcome = std::variant<CompressionResult, std::string>;
  constexpr std::size_t kBatch = 1024;
  std::size_t failures = 0;
  std::vector<QARecord> batch;
  auto flush = [&] {
    const auto results = parallel_map<std::unique_ptr<Scorer>, Outcome>(
        batch.size(), o.jobs, make, [&](std::unique_ptr<Scorer>& scorer, std::size_t i) -> Outcome {
          try {
            return compress(batch[i], *scorer, cfg);
          } catch (const WindowOverflowError&) {
            throw;
          } catch (const ScorerNotConfiguredError&) {
            throw;
          } catch (const Error& e) {
            return std::string(e.what());
          }
        });
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (const auto* r = std::get_if<CompressionResult>(&results[i])) {
        writer.write(*r);
      } else {
        ++failures;
        err << "warning: record '" << batch[i].id << "': " << std::get<std::string>(results[i]) << "\n";
      }
    }
    batch.clear();
  };
  while (auto rec = reader.next()) {
    batch.push_back(std::move(*rec));
    if (batch.size() == kBatch) flush();
  }
  if (!batch.empty()) flush();
  writer.close();
  if (reader.malformed_count() > 0)
    err << "warning: skipped " << reader.malformed_count() << " malformed line(s) in " << o.input << "\n";
  out << "compressed " << writer.count() << " record(s) into " << o.output << "\n";
  if (failures > 0) {
    err << "error[runtime]: " << failures << " record(s) failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

EndpointConfig endpoint_config(const Options& o) {
  EndpointConfig e;
  e.base_url = o.endpoint;
  e.model_name = o.endpoint_model;
  e.timeout_seconds = o.timeout;
  e.max_output_tokens = o.max_tokens;
  e.text_path = o.text_path;
  e.max_in_flight = o.max_in_flight;
  if (!o.token_env.empty()) e.token_env = o.token_env;
  if (!o.prompt_file.empty()) {
    std::ifstream in(o.prompt_file);
    if (!in) throw UsageError("--prompt-file: cannot open '" + o.prompt_file + "'");
    e.prompt_template.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  validate_endpoint(e);
  return e;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.output.empty()) throw UsageError("--output is required");
  const auto cfg = compression_config(o);
  const auto metrics = split_list(o.metrics);
  for (const auto& m : metrics)
    if (m != "coverage" && m != "em") throw UsageError("--metrics: unknown metric '" + m + "' (expected coverage, em)");
  const bool want_em = std::find(metrics.begin(), metrics.end(), "em") != metrics.end();
  const bool want_cov = std::find(metrics.begin(), metrics.end(), "coverage") != metrics.end();
  std::optional<EndpointConfig> endpoint;
  if (want_em) {
    if (o.endpoint.empty()) throw UsageError("--metrics em needs --endpoint");
    endpoint = endpoint_config(o);
  }
  const auto taus = o.taus.empty() ? std::vector<double>{cfg.tau} : parse_numbers(o.taus, "--taus");
  for (double t : taus) {
    auto c = cfg;
    c.tau = t;
    validate_config(c);
  }

  const auto setup = ScorerSetup::from(o, cfg);
  const auto make = setup.factory(parse_scorer_kind(o.scorer));
  const auto records = read_dataset(o, err);
  const auto id = dataset_id(o);
  const auto scorer_name = make()->name();

  std::vector<EvalReport> reports;
  if (want_cov) {
    std::string link;
    if (taus.size() > 1) {
      link = "tau-comparison:";
      for (std::size_t i = 0; i < taus.size(); ++i) link += (i ? "," : "") + nlohmann::json(taus[i]).dump();
    }
    for (double t : taus) {
      auto c = cfg;
      c.tau = t;
      using Slot = std::variant<std::monostate, double, std::string>;
      const auto slots = parallel_map<std::unique_ptr<Scorer>, Slot>(
          records.size(), o.jobs, make, [&](std::unique_ptr<Scorer>& scorer, std::size_t i) -> Slot {
            const auto& rec = records[i];
            if (rec.answers.empty()) return std::monostate{};
            try {
              return static_cast<double>(information_coverage_any(compress(rec, *scorer, c).compressed_text, rec.answers));
            } catch (const Error& e) {
              return std::string(e.what());
            }
          });
      EvalReport r;
      r.dataset_id = id;
      r.metric = Metric::InfoCoverage;
      r.scorer = scorer_name;
      r.config = {{"compression", to_json(c)}};
      r.link = link;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (std::holds_alternative<std::monostate>(slots[i])) {
          r.excluded.push_back(records[i].id + ": no gold answer");
          continue;
        }
        r.record_ids.push_back(records[i].id);
        const bool failed = std::holds_alternative<std::string>(slots[i]);
        if (failed) err << "warning: record '" << records[i].id << "': " << std::get<std::string>(slots[i]) << "\n";
        r.per_example.push_back(failed ? 0.0 : std::get<double>(slots[i]));
        r.failed.push_back(failed);
      }
      finalize(r);
      reports.push_back(std::move(r));
    }
  }
  Transcript transcript;
  if (want_em) {
    const LlmClient client(*endpoint);
    const std::function<CompressFn()> make_compressor = [&] {
      std::shared_ptr<Scorer> scorer = make();
      return CompressFn([scorer](const QARecord& r, const CompressionConfig& c) { return compress(r, *scorer, c); });
    };
    for (auto& run : evaluate_downstream_taus(records, cfg, taus, client, make_compressor, o.jobs, id)) {
      run.report.scorer = scorer_name;
      for (std::size_t i = 0; i < run.errors.size(); ++i)
        if (!run.errors[i].empty()) err << "warning: record '" << records[i].id << "': " << run.errors[i] << "\n";
      transcript.insert(transcript.end(), run.transcript.begin(), run.transcript.end());
      reports.push_back(std::move(run.report));
    }
  }

  write_reports(o.output, reports);
  if (!o.transcript.empty()) {
    JsonlWriter w(o.transcript);
    for (const auto& t : transcript) w.write(t, "request");
    w.close();
  }
  out << "metric,tau,scorer,aggregate,records,failures\n";
  for (const auto& r : reports)
    out << to_string(r.metric) << "," << format_number(r.config.at("compression").at("tau").get<double>()) << ","
        << r.scorer << "," << format_number(r.aggregate) << "," << r.per_example.size() << "," << r.failure_count
        << "\n";
  return kExitOk;
}

int cmd_mrr(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dir = output_dir(o);
  const auto cfg = compression_config(o);
  const auto setup = ScorerSetup::from(o, cfg);
  std::vector<NamedScorer> scorers;
  for (const auto& name : split_list(o.scorers)) scorers.push_back({name, setup.factory(parse_scorer_kind(name))});
  if (scorers.empty()) throw UsageError("--scorers: expected at least one scorer");
  const auto records = read_dataset(o, err);

  const auto outcomes = mrr_experiment(records, scorers, o.jobs, dataset_id(o));
  const auto table = mrr_table_json(outcomes);
  write_text_file(dir / "mrr.json", table.dump(2) + "\n");
  write_text_file(dir / "mrr.csv", mrr_table_csv(outcomes));
  write_text_file(dir / "mrr.svg", mrr_bar_chart(outcomes));
  out << mrr_table_csv(outcomes);

  bool any_ok = false;
  for (const auto& oc : outcomes) {
    if (oc.report) any_ok = true;
    else err << "warning: scorer '" << oc.scorer << "' failed: " << oc.error << "\n";
  }
  if (!any_ok) {
    err << "error[runtime]: every scorer failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dir = output_dir(o);
  const auto cfg = compression_config(o);
  const auto sigmas = parse_numbers(o.sigmas, "--sigmas");
  for (double s : sigmas)
    if (!(s > 0.0)) throw UsageError("--sigmas: every sigma must be > 0");
  const auto setup = ScorerSetup::from(o, cfg);
  const auto make = setup.factory(parse_scorer_kind(o.scorer));
  const auto records = read_dataset(o, err);

  const auto report = sigma_sweep(records, sigmas, cfg, make, o.jobs, dataset_id(o));
  write_text_file(dir / "sweep.json", to_json(report).dump(2) + "\n");
  write_text_file(dir / "sweep.csv", to_csv(report));
  write_text_file(dir / "sweep.svg", sweep_line_chart(report));
  out << to_csv(report);
  return kExitOk;
}

int cmd_export_check(const Options& o, std::ostream& out, std::ostream&) {
  if (o.model.empty()) throw UsageError("--model is required");
  const auto report = check_artifact(o.model);
  for (const auto& n : report.notes) out << "ok: " << n << "\n";
  for (const auto& p : report.problems) out << "problem: " << p << "\n";
  out << (report.ok ? "artifact valid\n" : "artifact invalid\n");
  return report.ok ? kExitOk : kExitRuntime;
}

void add_data_options(CLI::App* sub, Options& o) {
  sub->add_option("--input", o.input, "Input JSONL dataset");
  sub->add_option("--fields", o.fields, "Field map, e.g. question=query,context=/doc/text");
  sub->add_option("--dataset-id", o.dataset_id, "Dataset name recorded in reports (default: input file stem)");
  sub->add_flag("--strict", o.strict, "Fail on the first malformed input line");
  sub->add_option("--jobs", o.jobs, "Worker threads (0 = available parallelism)");
}

void add_compression_options(CLI::App* sub, Options& o) {
  sub->add_option("--tau", o.tau, "Retained fraction of words, 0 < tau <= 1");
  sub->add_option("--sigma", o.sigma, "Gaussian smoothing width in words (0 disables)");
  sub->add_option("--window", o.window_k, "Smoothing half-width K");
  sub->add_option("--chunk-size", o.chunk_size, "Tokens per chunk for chunked strategies");
  sub->add_option("--strategy", o.strategy, "single | chunk1 | chunk2");
  sub->add_option("--chunk-merge", o.chunk_merge, "Strategy 2 merge: global-softmax | per-chunk-softmax");
  sub->add_option("--layers", o.layers, "all | last | comma-separated layer indices");
  sub->add_option("--min-retained", o.min_retained, "Lower bound on retained words");
}

void add_scorer_options(CLI::App* sub, Options& o, bool single_scorer) {
  if (single_scorer)
    sub->add_option("--scorer", o.scorer, "cross-first | cross-total | self-attn | self-info | mock | random");
  sub->add_option("--model", o.model, "Model artifact directory");
  sub->add_option("--mock-table", o.mock_table, "JSON word-score table for the mock scorer");
  sub->add_option("--seed", o.seed, "Seed for the random scorer");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Query-aware extractive context compression"};
  app.name("crossprune");
  app.set_config("--config", "", "INI or TOML file with option defaults; flags override it");
  app.require_subcommand(1, 1);

  auto* compress_cmd = app.add_subcommand("compress", "Compress every record of a JSONL dataset");
  add_data_options(compress_cmd, o);
  add_compression_options(compress_cmd, o);
  add_scorer_options(compress_cmd, o, true);
  compress_cmd->add_option("--output", o.output, "Output JSONL of compression results");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Information coverage and downstream exact match");
  add_data_options(evaluate_cmd, o);
  add_compression_options(evaluate_cmd, o);
  add_scorer_options(evaluate_cmd, o, true);
  evaluate_cmd->add_option("--output", o.output, "Output JSONL of evaluation reports");
  evaluate_cmd->add_option("--metrics", o.metrics, "coverage, em, or both (comma-separated)");
  evaluate_cmd->add_option("--taus", o.taus, "Comma-separated tau values; reports are linked");
  evaluate_cmd->add_option("--endpoint", o.endpoint, "Completion endpoint URL for exact match");
  evaluate_cmd->add_option("--endpoint-model", o.endpoint_model, "Model name sent to the endpoint");
  evaluate_cmd->add_option("--timeout", o.timeout, "Endpoint timeout in seconds");
  evaluate_cmd->add_option("--max-tokens", o.max_tokens, "Answer length limit sent to the endpoint");
  evaluate_cmd->add_option("--prompt-file", o.prompt_file, "Prompt template with {context} and {question}");
  evaluate_cmd->add_option("--text-path", o.text_path, "JSON pointer of the answer in the response");
  evaluate_cmd->add_option("--max-in-flight", o.max_in_flight, "Concurrent endpoint requests");
  evaluate_cmd->add_option("--token-env", o.token_env, "Environment variable holding a bearer token");
  evaluate_cmd->add_option("--transcript", o.transcript, "Write every endpoint request to this JSONL file");

  auto* mrr_cmd = app.add_subcommand("mrr-experiment", "Reciprocal rank of answer tokens per scorer");
  add_data_options(mrr_cmd, o);
  add_compression_options(mrr_cmd, o);
  add_scorer_options(mrr_cmd, o, false);
  mrr_cmd->add_option("--scorers", o.scorers, "Comma-separated scorers to compare");
  mrr_cmd->add_option("--output", o.output, "Directory for mrr.json, mrr.csv and mrr.svg");

  auto* sweep_cmd = app.add_subcommand("sigma-sweep", "Coverage and retained-set overlap across sigma values");
  add_data_options(sweep_cmd, o);
  add_compression_options(sweep_cmd, o);
  add_scorer_options(sweep_cmd, o, true);
  sweep_cmd->add_option("--sigmas", o.sigmas, "Comma-separated sigma grid");
  sweep_cmd->add_option("--output", o.output, "Directory for sweep.json, sweep.csv and sweep.svg");

  auto* check_cmd = app.add_subcommand("export-check", "Validate a model artifact directory");
  check_cmd->add_option("--model", o.model, "Model artifact directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error[usage]: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (compress_cmd->parsed()) return cmd_compress(o, out, err);
    if (evaluate_cmd->parsed()) return cmd_evaluate(o, out, err);
    if (mrr_cmd->parsed()) return cmd_mrr(o, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep(o, out, err);
    return cmd_export_check(o, out, err);
  } catch (const UsageError& e) {
    err << "error[usage]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error[usage]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ScorerNotConfiguredError& e) {
    err << "error[usage]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error[runtime]: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace crossprune::cli
