#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace permcca {

// Worker count from an explicit request (0 = hardware concurrency).
unsigned resolve_threads(unsigned requested);

// Calls fn(worker, i) for every i in [begin, end) on up to `threads` workers.
// Items are handed out in fixed-size chunks from a shared counter; callers
// keep results deterministic by writing per-item outputs or reducing
// per-worker integer tallies. The first exception thrown by any worker is
// rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, Fn&& fn, std::size_t chunk = 8)
{
  if (begin >= end)
    return;
  const std::size_t items = end - begin;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(threads, 1u), (items + chunk - 1) / chunk));
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i)
      fn(0u, i);
    return;
  }

  std::atomic<std::size_t> next{begin};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&](unsigned worker) {
    try {
      for (;;) {
        const std::size_t start = next.fetch_add(chunk);
        if (start >= end)
          break;
        const std::size_t stop = std::min(end, start + chunk);
        for (std::size_t i = start; i < stop; ++i)
          fn(worker, i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure)
        failure = std::current_exception();
      next.store(end);
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w)
    pool.emplace_back(body, w);
  body(0);
  for (auto& t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace permcca
