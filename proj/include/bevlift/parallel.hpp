#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace bevlift::detail {

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunk boundaries
// depend only on (n, threads), so any per-chunk state can be merged
// deterministically by chunk index.
template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n == 0) {
    fn(std::size_t{0}, n, 0);
    return;
  }
  const std::size_t nthreads =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  const std::size_t chunk = (n + nthreads - 1) / nthreads;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end, t] { fn(begin, end, static_cast<int>(t)); });
  }
  for (auto& th : pool) th.join();
}

inline int chunk_count(std::size_t n, int threads) {
  threads = std::max(1, threads);
  if (threads == 1 || n == 0) return 1;
  const std::size_t nthreads =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  const std::size_t chunk = (n + nthreads - 1) / nthreads;
  return static_cast<int>((n + chunk - 1) / chunk);
}

}  // namespace bevlift::detail
