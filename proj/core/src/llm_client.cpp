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

#include "crossprune/llm_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "crossprune/parallel.hpp"

namespace crossprune {

namespace {

std::size_t count_of(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string strip(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

void validate_endpoint(const EndpointConfig& cfg) {
  if (!cfg.base_url.starts_with("http://") && !cfg.base_url.starts_with("https://"))
    throw ConfigError("base_url", "endpoint URL must start with http:// or https://, got '" + cfg.base_url + "'");
  if (!(cfg.timeout_seconds > 0.0)) throw ConfigError("timeout", "endpoint timeout must be > 0 seconds");
  if (cfg.max_output_tokens < 1) throw ConfigError("max_output_tokens", "max_output_tokens must be >= 1");
  if (cfg.max_attempts < 1) throw ConfigError("max_attempts", "max_attempts must be >= 1");
  if (cfg.backoff_seconds < 0.0) throw ConfigError("backoff", "backoff must be >= 0 seconds");
  if (cfg.max_in_flight < 1) throw ConfigError("max_in_flight", "max_in_flight must be >= 1");
  if (cfg.text_path.empty() || cfg.text_path.front() != '/')
    throw ConfigError("text_path", "text_path must be a JSON pointer such as /text");
  for (std::string_view ph : {"{context}", "{question}"})
    if (count_of(cfg.prompt_template, ph) != 1)
      throw ConfigError("prompt_template",
                        "prompt template must contain " + std::string(ph) + " exactly once, found " +
                            std::to_string(count_of(cfg.prompt_template, ph)));
}

std::string render_prompt(std::string_view prompt_template, std::string_view context, std::string_view question) {
  // Substitute left to right so placeholder text inside the context is not expanded.
  std::string out;
  std::size_t pos = 0;
  while (pos < prompt_template.size()) {
    const auto c = prompt_template.find("{context}", pos);
    const auto q = prompt_template.find("{question}", pos);
    const auto next = std::min(c, q);
    if (next == std::string_view::npos) {
      out.append(prompt_template.substr(pos));
      break;
    }
    out.append(prompt_template.substr(pos, next - pos));
    if (next == c) {
      out.append(context);
      pos = next + 9;
    } else {
      out.append(question);
      pos = next + 10;
    }
  }
  return out;
}

nlohmann::json build_request(const EndpointConfig& cfg, std::string_view prompt) {
  return {{"model", cfg.model_name}, {"prompt", std::string(prompt)}, {"max_tokens", cfg.max_output_tokens}};
}

nlohmann::json to_json(const EndpointConfig& cfg) {
  return {{"base_url", cfg.base_url},
          {"model_name", cfg.model_name},
          {"timeout_seconds", cfg.timeout_seconds},
          {"max_output_tokens", cfg.max_output_tokens},
          {"prompt_template", cfg.prompt_template},
          {"text_path", cfg.text_path},
          {"max_attempts", cfg.max_attempts}};
}

LlmClient::LlmClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  validate_endpoint(cfg_);
  const auto scheme_end = cfg_.base_url.find("://") + 3;
  const auto path_start = cfg_.base_url.find('/', scheme_end);
  if (path_start == std::string::npos) {
    scheme_host_port_ = cfg_.base_url;
    path_ = "/";
  } else {
    scheme_host_port_ = cfg_.base_url.substr(0, path_start);
    path_ = cfg_.base_url.substr(path_start);
  }
}

std::string LlmClient::answer(std::string_view context, std::string_view question, Transcript* transcript) const {
  const auto body = build_request(cfg_, render_prompt(cfg_.prompt_template, context, question));
  const std::string payload = body.dump();

  httplib::Client client(scheme_host_port_);
  const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
  const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!cfg_.token_env.empty())
    if (const char* token = std::getenv(cfg_.token_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);

  double backoff = cfg_.backoff_seconds;
  for (int attempt = 1;; ++attempt) {
    nlohmann::json entry = {{"url", cfg_.base_url}, {"attempt", attempt}, {"body", body}};
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, payload, "application/json");
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    std::exception_ptr failure;
    bool transient = false;
    if (!res) {
      const auto err = res.error();
      entry["error"] = httplib::to_string(err);
      transient = true;
      if (err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && elapsed >= cfg_.timeout_seconds * 0.9))
        failure = std::make_exception_ptr(LlmTimeoutError("endpoint timed out after " +
                                                          std::to_string(cfg_.timeout_seconds) + " s"));
      else
        failure = std::make_exception_ptr(
            LlmConnectionError("cannot reach endpoint " + cfg_.base_url + ": " + httplib::to_string(err)));
    } else {
      entry["status"] = res->status;
      if (res->status < 200 || res->status > 299) {
        transient = transient_status(res->status);
        failure = std::make_exception_ptr(
            LlmHttpStatusError(res->status, "endpoint returned HTTP " + std::to_string(res->status)));
      } else {
        entry["response"] = res->body;
        nlohmann::json parsed;
        try {
          parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error&) {
          if (transcript) transcript->push_back(entry);
          throw LlmMalformedResponseError(cfg_.text_path, "endpoint response is not JSON");
        }
        const nlohmann::json::json_pointer ptr(cfg_.text_path);
        if (!parsed.contains(ptr) || !parsed.at(ptr).is_string()) {
          if (transcript) transcript->push_back(entry);
          throw LlmMalformedResponseError(cfg_.text_path, "endpoint response lacks a string field at '" +
                                                              cfg_.text_path + "'");
        }
        if (transcript) transcript->push_back(entry);
        return strip(parsed.at(ptr).get<std::string>());
      }
    }
    if (transcript) transcript->push_back(entry);
    if (!transient || attempt >= cfg_.max_attempts) std::rethrow_exception(failure);
    std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    backoff *= 2.0;
  }
}

DownstreamRun evaluate_downstream(std::span<const QARecord> records, const CompressionConfig& cfg,
                                  const LlmClient& client, const std::function<CompressFn()>& make_compressor,
                                  std::size_t jobs, const std::string& dataset_id) {
  struct Slot {
    double em = 0.0;
    bool failed = false;
    std::string prediction;
    std::string error;
    Transcript transcript;
  };
  const std::size_t workers = std::min(resolve_jobs(jobs), client.config().max_in_flight);
  const auto slots = parallel_map<CompressFn, Slot>(records.size(), workers, make_compressor,
                                                    [&](CompressFn& compress_fn, std::size_t i) {
                                                      Slot s;
                                                      const auto& rec = records[i];
                                                      try {
                                                        if (rec.answers.empty())
                                                          throw EvaluationError("record has no gold answer");
                                                        const auto result = compress_fn(rec, cfg);
                                                        s.prediction = client.answer(result.compressed_text,
                                                                                     rec.query, &s.transcript);
                                                        s.em = exact_match(s.prediction, rec.answers);
                                                      } catch (const std::exception& e) {
                                                        s.failed = true;
                                                        s.em = 0.0;
                                                        s.prediction.clear();
                                                        s.error = e.what();
                                                      }
                                                      for (auto& t : s.transcript) t["record_id"] = rec.id;
                                                      return s;
                                                    });

  DownstreamRun run;
  run.report.dataset_id = dataset_id;
  run.report.metric = Metric::ExactMatch;
  run.report.config = {{"compression", to_json(cfg)}, {"endpoint", to_json(client.config())}};
  for (std::size_t i = 0; i < slots.size(); ++i) {
    run.report.record_ids.push_back(records[i].id);
    run.report.per_example.push_back(slots[i].em);
    run.report.failed.push_back(slots[i].failed);
    run.predictions.push_back(slots[i].prediction);
    run.errors.push_back(slots[i].error);
    run.transcript.insert(run.transcript.end(), slots[i].transcript.begin(), slots[i].transcript.end());
  }
  finalize(run.report);
  return run;
}

std::vector<DownstreamRun> evaluate_downstream_taus(std::span<const QARecord> records, const CompressionConfig& cfg,
                                                    std::span<const double> taus, const LlmClient& client,
                                                    const std::function<CompressFn()>& make_compressor,
                                                    std::size_t jobs, const std::string& dataset_id) {
  std::string link = "tau-comparison:";
  for (std::size_t i = 0; i < taus.size(); ++i) link += (i ? "," : "") + nlohmann::json(taus[i]).dump();
  std::vector<DownstreamRun> runs;
  for (double tau : taus) {
    auto c = cfg;
    c.tau = tau;
    validate_config(c);
    runs.push_back(evaluate_downstream(records, c, client, make_compressor, jobs, dataset_id));
    runs.back().report.link = link;
  }
  return runs;
}

}  // namespace crossprune
