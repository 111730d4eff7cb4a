#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace levykm {

inline int effective_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs body(begin, end, worker) over contiguous chunks of [0, count). The
// partition depends only on (count, threads), so any per-row work keyed by
// row index gives identical results for every thread count.
template <class F>
void parallel_for(std::int64_t count, int threads, F&& body) {
  const int t = effective_threads(threads);
  if (t <= 1 || count < 2) {
    if (count > 0) body(std::int64_t{0}, count, 0);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(t, count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::int64_t chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end, w] { body(begin, end, w); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace levykm
