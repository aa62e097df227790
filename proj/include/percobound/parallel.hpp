#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace percobound {

/// Worker count resolution: explicit request > PERCOBOUND_THREADS > hardware.
inline unsigned resolve_workers(unsigned requested = 0) {
  unsigned limit = 256;
  if (requested > 0) return std::min(requested, limit);
  if (const char* env = std::getenv("PERCOBOUND_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return std::min(static_cast<unsigned>(v), limit);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? std::min(hw, limit) : 1u;
}

// Deterministic replica runner.  Replicas are independent work units keyed by
// their index; each block of replicas accumulates exact integer counters into
// its own slot, and slots are reduced in block order.  Results are therefore
// identical for any worker count and any scheduling.
//
// MakeCtx: () -> Ctx (one per worker; scratch buffers live here)
// Body:    (Ctx&, uint64_t replica, std::span<uint64_t> counters) -> void
template <class MakeCtx, class Body>
std::vector<std::uint64_t> run_counting_replicas(std::uint64_t replicas,
                                                 std::size_t n_counters,
                                                 unsigned workers,
                                                 MakeCtx make_ctx, Body body) {
  constexpr std::uint64_t kBlock = 512;
  const std::uint64_t n_blocks = (replicas + kBlock - 1) / kBlock;
  std::vector<std::uint64_t> partials(n_blocks * n_counters, 0);

  workers = resolve_workers(workers);
  if (n_blocks < workers) workers = static_cast<unsigned>(n_blocks);
  if (workers == 0) workers = 1;

  std::atomic<std::uint64_t> next_block{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};

  auto work = [&](unsigned) {
    try {
      auto ctx = make_ctx();
      for (;;) {
        std::uint64_t b = next_block.fetch_add(1);
        if (b >= n_blocks || failed.load(std::memory_order_relaxed)) break;
        std::span<std::uint64_t> acc(partials.data() + b * n_counters, n_counters);
        const std::uint64_t lo = b * kBlock;
        const std::uint64_t hi = std::min(replicas, lo + kBlock);
        for (std::uint64_t r = lo; r < hi; ++r) body(ctx, r, acc);
      }
    } catch (...) {
      bool expected = false;
      if (failed.compare_exchange_strong(expected, true)) {
        first_error = std::current_exception();
      }
    }
  };

  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) std::rethrow_exception(first_error);

  std::vector<std::uint64_t> totals(n_counters, 0);
  for (std::uint64_t b = 0; b < n_blocks; ++b)
    for (std::size_t k = 0; k < n_counters; ++k)
      totals[k] += partials[b * n_counters + k];
  return totals;
}

}  // namespace percobound
