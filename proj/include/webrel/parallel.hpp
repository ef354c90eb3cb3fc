#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "webrel/random.hpp"

namespace webrel {

/// Mean / variance accumulator (Welford), mergeable in a fixed order.
struct SampleStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const SampleStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    const double nt = na + nb;
    mean += d * nb / nt;
    m2 += o.m2 + d * d * na * nb / nt;
    n += o.n;
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any task is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::min<unsigned>(resolve_threads(threads),
                               static_cast<unsigned>(std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

/// Splits `samples` into fixed-size chunks; chunk c gets an engine seeded with
/// derive_seed(seed, c). Results come back in chunk order, so the outcome is
/// independent of the thread count.
template <class ChunkResult, class ChunkFn>
std::vector<ChunkResult> map_chunks(std::size_t samples, std::size_t chunk_size, unsigned threads,
                                    std::uint64_t seed, ChunkFn&& fn) {
  chunk_size = std::max<std::size_t>(chunk_size, 1);
  const std::size_t chunks = (samples + chunk_size - 1) / chunk_size;
  std::vector<ChunkResult> out(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    const std::size_t begin = c * chunk_size;
    const std::size_t end = std::min(samples, begin + chunk_size);
    out[c] = fn(begin, end, rng);
  });
  return out;
}

/// Mean and standard error of per_sample(rng) over `samples` draws.
template <class SampleFn>
SampleStats chunked_mean(std::size_t samples, std::size_t chunk_size, unsigned threads,
                         std::uint64_t seed, SampleFn&& per_sample) {
  auto parts = map_chunks<SampleStats>(samples, chunk_size, threads, seed,
                                       [&](std::size_t b, std::size_t e, Rng& rng) {
                                         SampleStats s;
                                         for (std::size_t i = b; i < e; ++i) s.push(per_sample(rng));
                                         return s;
                                       });
  SampleStats total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

}  // namespace webrel
