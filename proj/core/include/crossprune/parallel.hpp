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

// Index-ordered parallel map with per-worker state (e.g. one scorer per thread).

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

namespace crossprune {

/// Number of workers for `requested` (0 means available parallelism).
inline std::size_t resolve_jobs(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Computes fn(state, i) for i in [0, n) on up to `jobs` threads, each with
/// its own state from make_state(). Results come back in index order. If any
/// call throws, the exception of the lowest failing index is rethrown after
/// all workers stop.
template <typename State, typename Out>
std::vector<Out> parallel_map(std::size_t n, std::size_t jobs, const std::function<State()>& make_state,
                              const std::function<Out(State&, std::size_t)>& fn) {
  std::vector<std::optional<Out>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr setup_error;
  std::atomic<bool> setup_failed{false};

  auto worker = [&] {
    std::optional<State> state;
    try {
      state.emplace(make_state());
    } catch (...) {
      if (!setup_failed.exchange(true)) setup_error = std::current_exception();
      return;
    }
    for (std::size_t i = next++; i < n && !setup_failed; i = next++) {
      try {
        slots[i].emplace(fn(*state, i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t workers = std::min(resolve_jobs(jobs), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (setup_error) std::rethrow_exception(setup_error);
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<Out> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace crossprune
