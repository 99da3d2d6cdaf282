#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace hartgeom {

inline unsigned& detail_max_threads() {
  static unsigned n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

inline void set_max_threads(unsigned n) { detail_max_threads() = std::max(1u, n); }
inline unsigned max_threads() { return detail_max_threads(); }

/// Static chunked parallel loop. Each index is processed exactly once and
/// writes only its own slot, so results are independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
  const std::size_t n = end > begin ? end - begin : 0;
  unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(max_threads(), n / 4096 + 1));
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = begin + std::size_t(w) * chunk;
    std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace hartgeom
