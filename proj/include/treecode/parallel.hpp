#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace treecode {

// Thread count precedence: TREECODE_THREADS env var, then the requested
// value, then hardware concurrency.
inline int resolve_thread_count(int requested) {
  if (const char* env = std::getenv("TREECODE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs body(begin, end) over contiguous bands of [0, n). Bands are fixed by
// (n, threads) alone, so any output written to disjoint per-index slots is
// identical for every thread count.
template <typename Body>
void parallel_for(long long n, int threads, const Body& body) {
  if (n <= 0) return;
  if (threads < 1) threads = 1;
  if (threads > n) threads = static_cast<int>(n);
  if (threads == 1) {
    body(0LL, n);
    return;
  }
  const long long base = n / threads;
  const long long rem = n % threads;
  std::vector<std::thread> workers;
  workers.reserve(threads - 1);
  long long begin = 0;
  for (int t = 0; t < threads; ++t) {
    const long long len = base + (t < rem ? 1 : 0);
    const long long end = begin + len;
    if (t + 1 == threads) {
      body(begin, end);
    } else {
      workers.emplace_back([&body, begin, end] { body(begin, end); });
    }
    begin = end;
  }
  for (auto& w : workers) w.join();
}

}  // namespace treecode
