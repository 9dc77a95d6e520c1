#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace levypass {

inline int default_thread_count() {
  if (const char* env = std::getenv("LEVYPASS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed chunks.
// Workers pull chunk indices atomically; per-chunk results must be written
// into chunk-indexed slots so the reduction order is fixed regardless of the
// worker count.
template <typename F>
void parallel_chunks(long n, long chunk, int threads, const F& fn) {
  if (n <= 0) return;
  const long n_chunks = (n + chunk - 1) / chunk;
  if (threads <= 0) threads = default_thread_count();
  threads = static_cast<int>(std::min<long>(threads, n_chunks));
  if (threads <= 1) {
    for (long ci = 0; ci < n_chunks; ++ci)
      fn(ci, ci * chunk, std::min(n, (ci + 1) * chunk));
    return;
  }
  std::atomic<long> next{0};
  auto worker = [&] {
    for (;;) {
      const long ci = next.fetch_add(1);
      if (ci >= n_chunks) return;
      fn(ci, ci * chunk, std::min(n, (ci + 1) * chunk));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace levypass
