#pragma once

// Deterministic worker pool for embarrassingly parallel replica loops.
// Work is always split into the same fixed chunk grid no matter how many
// threads run, and per-chunk results are merged in chunk order, so the
// floating-point reduction order (and hence every output byte) does not
// depend on LRAD_THREADS.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace lrad {

inline int worker_count() {
  if (const char* env = std::getenv("LRAD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(std::min<long>(v, 256));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(chunk_index, begin, end) over [0, n) split into at most
// `chunks` contiguous ranges. fn must only touch per-chunk state.
inline void parallel_chunks(std::int64_t n, int chunks,
                            const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int nchunks = static_cast<int>(std::min<std::int64_t>(chunks, n));
  const int nthreads = std::min(worker_count(), nchunks);
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= nchunks) return;
      const std::int64_t begin = n * c / nchunks;
      const std::int64_t end = n * (c + 1) / nchunks;
      fn(c, begin, end);
    }
  };
  if (nthreads <= 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

}  // namespace lrad
