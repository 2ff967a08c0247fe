#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace fbrd {

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1u : hc;
}

// Executes f(chunk) for every chunk in [0, chunk_count). The decomposition is
// fixed by chunk_count alone, so per-chunk results reduced in chunk order are
// bit-identical for any thread count. The first exception thrown by a worker
// is rethrown on the calling thread.
template <class F>
void parallel_chunks(std::size_t chunk_count, unsigned threads, F&& f) {
  threads = resolve_threads(threads);
  if (threads <= 1 || chunk_count <= 1) {
    for (std::size_t c = 0; c < chunk_count; ++c) f(c);
    return;
  }
  if (threads > chunk_count) threads = static_cast<unsigned>(chunk_count);

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunk_count) return;
      try {
        f(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Splits `total` items into chunks of at most `max_chunk` items, returning
// [begin, end) pairs. Used so Monte Carlo loops have a thread-count
// independent decomposition.
inline std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(
    std::size_t total, std::size_t max_chunk) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (max_chunk == 0) max_chunk = 1;
  for (std::size_t b = 0; b < total; b += max_chunk) {
    out.emplace_back(b, std::min(total, b + max_chunk));
  }
  return out;
}

}  // namespace fbrd
