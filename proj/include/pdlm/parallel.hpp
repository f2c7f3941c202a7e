#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace pdlm {

// Runs fn(i) for i in [0, n) on up to `threads` workers, in contiguous
// chunks. Callers make fn(i) depend only on i (per-index RNG substreams),
// so the result is the same for every worker count.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn, std::size_t min_chunk = 64) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n / std::max<std::size_t>(min_chunk, 1) + 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] {
      for (std::size_t i = b; i < e; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace pdlm
