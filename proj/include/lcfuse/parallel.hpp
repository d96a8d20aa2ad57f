#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace lcfuse {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(begin, end) over disjoint contiguous chunks of [0, count).
/// Chunk boundaries depend only on count and the thread count, and each
/// chunk writes its own output range, so results are identical for any
/// degree of parallelism.
template <typename Fn>
void parallel_for(std::int64_t count, int threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (count <= 0) return;
  const std::int64_t workers = std::min<std::int64_t>(threads, count);
  if (workers <= 1) {
    fn(std::int64_t{0}, count);
    return;
  }
  const std::int64_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (std::int64_t w = 1; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::int64_t{0}, std::min(count, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace lcfuse
