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

// Client for an external answer-generation endpoint and the downstream
// exact-match evaluation built on it.
//
// Wire format: HTTP POST to base_url with body {"model", "prompt",
// "max_tokens"}; the answer is the string at `text_path` (a JSON pointer)
// in the response. A bearer token is read from the environment variable
// named by `token_env`, never from flags or files.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crossprune/config.hpp"
#include "crossprune/error.hpp"
#include "crossprune/evaluation.hpp"

namespace crossprune {

inline constexpr std::string_view kDefaultPromptTemplate =
    "Answer the question using the context.\n\nContext: {context}\n\nQuestion: {question}\n\nAnswer:";

struct EndpointConfig {
  std::string base_url;  // full URL of the completion route, e.g. http://127.0.0.1:8000/v1/completions
  std::string model_name;
  double timeout_seconds = 60.0;
  int max_output_tokens = 32;
  std::string prompt_template = std::string(kDefaultPromptTemplate);
  std::string text_path = "/text";
  std::string token_env = "CROSSPRUNE_ENDPOINT_TOKEN";
  int max_attempts = 3;
  double backoff_seconds = 0.5;  // doubled after each failed attempt
  std::size_t max_in_flight = 4;
};

/// Throws ConfigError when a field is invalid; the template must contain
/// {context} and {question} exactly once each.
void validate_endpoint(const EndpointConfig& cfg);

std::string render_prompt(std::string_view prompt_template, std::string_view context, std::string_view question);

/// The JSON body sent for `prompt`.
nlohmann::json build_request(const EndpointConfig& cfg, std::string_view prompt);

class LlmError : public Error {
 public:
  using Error::Error;
};

class LlmTimeoutError : public LlmError {
 public:
  using LlmError::LlmError;
};

class LlmConnectionError : public LlmError {
 public:
  using LlmError::LlmError;
};

class LlmHttpStatusError : public LlmError {
 public:
  LlmHttpStatusError(int status, const std::string& message) : LlmError(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class LlmMalformedResponseError : public LlmError {
 public:
  LlmMalformedResponseError(std::string field, const std::string& message)
      : LlmError(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Every request attempt as a JSON object (url, body, attempt, status or
/// error), suitable for replay.
using Transcript = std::vector<nlohmann::json>;

class LlmClient {
 public:
  /// Validates `cfg`; throws ConfigError.
  explicit LlmClient(EndpointConfig cfg);

  /// Posts the rendered prompt and returns the stripped answer text.
  /// Connection failures, timeouts, 429 and 5xx are retried up to
  /// max_attempts; other failures throw at once. Safe to call concurrently.
  std::string answer(std::string_view context, std::string_view question, Transcript* transcript = nullptr) const;

  const EndpointConfig& config() const noexcept { return cfg_; }

 private:
  EndpointConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
};

using CompressFn = std::function<CompressionResult(const QARecord&, const CompressionConfig&)>;

struct DownstreamRun {
  EvalReport report;                     // metric EM, input order
  std::vector<std::string> predictions;  // "" for failed records
  std::vector<std::string> errors;       // "" for successful records
  Transcript transcript;                 // request log in input order
};

/// For each record: compress, prompt, answer, score EM. Failed records
/// score 0 with a failure flag. `make_compressor` is called once per worker.
DownstreamRun evaluate_downstream(std::span<const QARecord> records, const CompressionConfig& cfg,
                                  const LlmClient& client, const std::function<CompressFn()>& make_compressor,
                                  std::size_t jobs = 0, const std::string& dataset_id = "");

/// One run per tau; the reports share a `link` naming the comparison.
std::vector<DownstreamRun> evaluate_downstream_taus(std::span<const QARecord> records, const CompressionConfig& cfg,
                                                    std::span<const double> taus, const LlmClient& client,
                                                    const std::function<CompressFn()>& make_compressor,
                                                    std::size_t jobs = 0, const std::string& dataset_id = "");

/// Snapshot of the endpoint settings for reports (no credentials).
nlohmann::json to_json(const EndpointConfig& cfg);

}  // namespace crossprune
