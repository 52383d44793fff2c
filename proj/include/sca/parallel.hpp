#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace sca {

// Worker count used by data-parallel loops. Defaults to the hardware
// concurrency; SCA_THREADS in the environment overrides it.
std::size_t worker_count();
void set_worker_count(std::size_t n);

// Runs fn(i) for i in [begin, end) split into contiguous chunks. Each index is
// visited exactly once, so results written per index are deterministic.
template <class Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn, std::size_t min_chunk = 256) {
  if (end <= begin) return;
  const std::size_t total = end - begin;
  const std::size_t workers = std::min(worker_count(), (total + min_chunk - 1) / min_chunk);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (total + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

}  // namespace sca
