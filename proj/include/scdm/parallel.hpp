#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include "scdm/linalg.hpp"

namespace scdm {

/// Splits [begin, end) into `threads` contiguous chunks and runs
/// fn(chunk_index, lo, hi) on each. Chunk boundaries depend only on the range
/// and the thread count.
template <class Fn>
void parallel_chunks(Index begin, Index end, int threads, Fn&& fn) {
  const Index n = end > begin ? end - begin : 0;
  const Index workers = std::max<Index>(1, std::min<Index>(static_cast<Index>(std::max(threads, 1)), n));
  if (workers <= 1) {
    fn(Index{0}, begin, end);
    return;
  }
  const Index step = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (Index w = 1; w < workers; ++w) {
    const Index lo = begin + std::min(n, w * step);
    const Index hi = begin + std::min(n, (w + 1) * step);
    pool.emplace_back([&fn, w, lo, hi] { fn(w, lo, hi); });
  }
  fn(Index{0}, begin, begin + std::min(n, step));
}

inline Index chunk_count(Index begin, Index end, int threads) {
  const Index n = end > begin ? end - begin : 0;
  return std::max<Index>(1, std::min<Index>(static_cast<Index>(std::max(threads, 1)), n));
}

}  // namespace scdm
