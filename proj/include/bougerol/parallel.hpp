#pragma once

// Deterministic chunked parallel generation. Work is cut into fixed-size
// chunks, each with its own random stream derived from (purpose, chunk,
// attempt); results are merged in chunk order, so output never depends on
// the number of workers.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <thread>
#include <vector>

#include "bougerol/errors.hpp"
#include "bougerol/rng.hpp"

namespace bougerol {

struct ParallelOptions {
  std::uint64_t master_seed = 42;
  std::uint64_t attempt = 0;
  std::size_t workers = 1;
  std::size_t chunk_size = 1000;
};

/// Stream id for chunk `chunk` of a named purpose.
inline std::uint64_t chunk_stream_id(std::uint64_t purpose, std::uint64_t chunk,
                                     std::uint64_t attempt) {
  return mix_stream(mix_stream(purpose, chunk), attempt);
}

/// Runs body(chunk_index) for every chunk on up to `workers` threads. The
/// first exception (lowest chunk index) is rethrown after all threads join.
template <class Body>
void for_each_chunk(std::size_t chunks, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, chunks));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      body(c);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_chunk = chunks;
  auto worker = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) {
        return;
      }
      try {
        body(c);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (c < error_chunk) {
          error_chunk = c;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back(worker);
  }
  for (auto& t : threads) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

/// Replicates with per-replicate budget exclusions.
template <class T>
struct Replicates {
  std::vector<std::optional<T>> values;

  std::size_t excluded() const {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](const auto& v) { return !v.has_value(); }));
  }
};

/// Draws n replicates of fn(rng) in chunks. A replicate whose path budget
/// runs out is recorded as empty rather than dropped.
template <class Fn>
auto generate_replicates(std::size_t n, std::string_view purpose, const ParallelOptions& options,
                         Fn&& fn) -> Replicates<decltype(fn(std::declval<RngStream&>()))> {
  using T = decltype(fn(std::declval<RngStream&>()));
  if (options.chunk_size == 0) {
    throw DomainError("generate_replicates: chunk size must be positive");
  }
  Replicates<T> out;
  out.values.resize(n);
  const std::size_t chunks = (n + options.chunk_size - 1) / options.chunk_size;
  const std::uint64_t purpose_id = hash_name(purpose);
  for_each_chunk(chunks, options.workers, [&](std::size_t c) {
    RngStream rng(options.master_seed, chunk_stream_id(purpose_id, c, options.attempt));
    const std::size_t begin = c * options.chunk_size;
    const std::size_t end = std::min(n, begin + options.chunk_size);
    for (std::size_t i = begin; i < end; ++i) {
      try {
        out.values[i] = fn(rng);
      } catch (const BudgetError&) {
        out.values[i].reset();
      }
    }
  });
  return out;
}

/// As generate_replicates, for callers that never hit a budget.
template <class Fn>
auto generate(std::size_t n, std::string_view purpose, const ParallelOptions& options, Fn&& fn)
    -> std::vector<decltype(fn(std::declval<RngStream&>()))> {
  auto reps = generate_replicates(n, purpose, options, std::forward<Fn>(fn));
  std::vector<decltype(fn(std::declval<RngStream&>()))> out;
  out.reserve(n);
  for (auto& v : reps.values) {
    if (!v) {
      throw NumericalError("generate: unexpected budget exclusion for '" + std::string(purpose) + "'");
    }
    out.push_back(std::move(*v));
  }
  return out;
}

}  // namespace bougerol
