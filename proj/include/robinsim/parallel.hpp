#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace robinsim {

/// Number of workers to use when the caller passes 0.
inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Run body(acc, begin, end) over [0, n) in fixed-size chunks on `workers`
/// threads, each owning a copy of `proto`, then fold the copies with
/// Acc::merge in worker order.
///
/// Results are independent of `workers` as long as Acc::merge is associative
/// and commutative (integer counters are), because every index is processed
/// exactly once with state derived from the index alone.
template <class Acc, class Body>
Acc for_each_chunk(std::uint64_t n, unsigned workers, const Acc& proto, Body body,
                   std::uint64_t chunk = 4096) {
  if (workers == 0) workers = default_workers();
  const std::uint64_t chunks = (n + chunk - 1) / chunk;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(chunks, 1)));

  std::vector<Acc> partial(workers, proto);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&](unsigned w) {
    try {
      for (;;) {
        const std::uint64_t c = next.fetch_add(1, std::memory_order_relaxed);
        if (c >= chunks) break;
        const std::uint64_t begin = c * chunk;
        body(partial[w], begin, std::min(n, begin + chunk));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(chunks);
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  if (failure) std::rethrow_exception(failure);

  Acc result = std::move(partial.front());
  for (unsigned w = 1; w < workers; ++w) result.merge(partial[w]);
  return result;
}

}  // namespace robinsim
