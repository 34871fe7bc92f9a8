#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace ssrec {

inline int default_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(worker, begin, end) over contiguous chunks of [0, n). Chunk
// boundaries depend only on (n, threads), so any per-worker accumulation
// reduced in worker order is reproducible run to run.
inline void parallel_for_chunks(size_t n, int threads,
                                const std::function<void(int, size_t, size_t)>& fn) {
  if (threads < 1) threads = 1;
  if (n == 0) return;
  const size_t t = std::min<size_t>(static_cast<size_t>(threads), n);
  if (t == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (size_t w = 0; w < t; ++w) {
    const size_t begin = n * w / t;
    const size_t end = n * (w + 1) / t;
    pool.emplace_back([&fn, w, begin, end] { fn(static_cast<int>(w), begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ssrec
