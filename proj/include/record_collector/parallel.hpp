#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string_view>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace record_collector {

inline constexpr const char* kThreadsEnvVar = "RECORD_COLLECTOR_THREADS";

/// Worker count: RECORD_COLLECTOR_THREADS when set, otherwise the hardware
/// concurrency. Never less than one.
inline unsigned worker_count() {
  if (const char* env = std::getenv(kThreadsEnvVar); env != nullptr && *env != '\0') {
    std::string_view text(env);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0) {
      throw domain_error(std::string(kThreadsEnvVar) + " must be a positive integer, got '" +
                         std::string(text) + "'");
    }
    return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [0, count) into `parts` contiguous blocks; block b is
/// [bounds[b], bounds[b+1]).
inline std::vector<std::size_t> block_bounds(std::size_t count, std::size_t parts) {
  parts = std::max<std::size_t>(1, std::min(parts, count));
  std::vector<std::size_t> bounds(parts + 1);
  for (std::size_t b = 0; b <= parts; ++b) bounds[b] = count * b / parts;
  return bounds;
}

/// Runs body(block_index, begin, end) for each contiguous block of [0, count),
/// one worker thread per block. Exceptions from a worker are rethrown on the
/// caller after all workers join (lowest block index wins).
template <class Body>
void parallel_blocks(std::size_t count, unsigned workers, Body&& body) {
  const auto bounds = block_bounds(count, workers);
  const std::size_t parts = bounds.size() - 1;
  if (parts <= 1) {
    body(std::size_t{0}, std::size_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(parts);
  std::vector<std::thread> threads;
  threads.reserve(parts - 1);
  auto run = [&](std::size_t b) {
    try {
      body(b, bounds[b], bounds[b + 1]);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  for (std::size_t b = 1; b < parts; ++b) threads.emplace_back(run, b);
  run(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace record_collector
