#pragma once

// Deterministic data parallelism. Work is always cut into chunks whose
// boundaries depend only on the problem size, never on the thread count, and
// partial results are combined in a fixed pairwise order. Results are
// therefore bit-identical for any FRACLAB_THREADS setting.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace fraclab {

namespace detail {
inline std::atomic<int>& thread_override() {
  static std::atomic<int> value{0};
  return value;
}
}  // namespace detail

/// Number of worker threads. Explicit `set_thread_count` wins over the
/// FRACLAB_THREADS environment variable; the default is 1.
inline int thread_count() {
  if (int n = detail::thread_override().load(); n > 0) return n;
  if (const char* env = std::getenv("FRACLAB_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return 1;
}

inline void set_thread_count(int n) { detail::thread_override().store(n > 0 ? n : 0); }

inline constexpr std::size_t kChunkSize = 4096;

/// Calls `body(chunk_begin, chunk_end)` for fixed-size chunks of [0, n).
template <class Body>
void parallel_chunks(std::size_t n, Body&& body, std::size_t chunk = kChunkSize) {
  if (n == 0) return;
  const std::size_t chunks = (n + chunk - 1) / chunk;
  const int workers = static_cast<int>(std::min<std::size_t>(thread_count(), chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) body(c * chunk, std::min(n, (c + 1) * chunk));
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
}

template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t chunk = kChunkSize) {
  parallel_chunks(
      n,
      [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) body(i);
      },
      chunk);
}

/// Pairwise sum of `values` in place order.
inline double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

/// Deterministic sum of term(i) over [0, n): pairwise within fixed chunks,
/// then pairwise over the chunk partials.
template <class Term>
double deterministic_sum(std::size_t n, Term&& term) {
  if (n == 0) return 0.0;
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<double> partial(chunks, 0.0);
  parallel_chunks(n, [&](std::size_t b, std::size_t e) {
    std::vector<double> buf(e - b);
    for (std::size_t i = b; i < e; ++i) buf[i - b] = term(i);
    partial[b / kChunkSize] = pairwise_sum(buf.data(), buf.size());
  });
  return pairwise_sum(partial.data(), partial.size());
}

}  // namespace fraclab
