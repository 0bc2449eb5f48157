#pragma once
// Deterministic work distribution.
//
// parallel_for splits [0,count) into fixed-size blocks and runs them on a
// small thread pool.  Reductions accumulate per-block partials and combine
// them in block order, so results are bit-identical for any worker count
// (including 1).  Block size is fixed, not derived from worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace parawave {

inline constexpr std::size_t kBlockSize = 4096;

inline int default_workers() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// body(begin, end) is invoked for each block [begin, end).
inline void parallel_for_blocks(std::size_t count,
                                const std::function<void(std::size_t, std::size_t)>& body,
                                int workers) {
  if (count == 0) return;
  const std::size_t nblocks = (count + kBlockSize - 1) / kBlockSize;
  if (workers <= 1 || nblocks == 1) {
    for (std::size_t b = 0; b < nblocks; ++b)
      body(b * kBlockSize, std::min(count, (b + 1) * kBlockSize));
    return;
  }
  std::vector<std::thread> pool;
  const int nw = std::min<std::size_t>(static_cast<std::size_t>(workers), nblocks);
  pool.reserve(static_cast<std::size_t>(nw));
  std::atomic<std::size_t> cursor{0};
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t b = cursor.fetch_add(1);
        if (b >= nblocks) break;
        body(b * kBlockSize, std::min(count, (b + 1) * kBlockSize));
      }
    });
  }
  for (auto& th : pool) th.join();
}

// Deterministic sum reduction: per-block partials combined in block order.
// term(i) must be pure.
inline double reduce_sum(std::size_t count, const std::function<double(std::size_t)>& term,
                         int workers = 1) {
  if (count == 0) return 0.0;
  const std::size_t nblocks = (count + kBlockSize - 1) / kBlockSize;
  std::vector<double> partial(nblocks, 0.0);
  parallel_for_blocks(
      count,
      [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += term(i);
        partial[b / kBlockSize] = s;
      },
      workers);
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace parawave
