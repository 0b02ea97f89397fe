#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace rgbdc {

// Worker cap: RGBD_CONSIST_THREADS if set, otherwise hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("RGBD_CONSIST_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Static chunking over [begin, end); each index is processed exactly once and
// writes only its own outputs, so results are identical for any worker count.
inline void parallel_for(int begin, int end, const std::function<void(int)>& body) {
  int n = end - begin;
  if (n <= 0) return;
  int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = begin + w * chunk;
    int hi = std::min(lo + chunk, end);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace rgbdc
