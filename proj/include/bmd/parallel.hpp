#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bmd {

// Resolve a worker-count request: 0 means "use all hardware threads".
inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Run fn(begin, end) over a static partition of [0, count).  Callers must
// write to disjoint locations per index; because the partition only changes
// which thread evaluates an index (never the per-index arithmetic), results
// are bitwise identical for any thread count.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (count == 0) return;
    if (threads <= 1 || count == 1) {
        fn(std::size_t{0}, count);
        return;
    }
    if (threads > count) threads = static_cast<unsigned>(count);
    const std::size_t chunk = (count + threads - 1) / threads;

    // First exception wins; the rest of the ranges still run to completion so
    // every thread can be joined before we rethrow.
    std::exception_ptr error;
    std::mutex error_mutex;
    auto guarded = [&](std::size_t lo, std::size_t hi) {
        try {
            fn(lo, hi);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (unsigned t = 1; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&guarded, lo, hi] { guarded(lo, hi); });
    }
    guarded(std::size_t{0}, std::min(count, chunk));
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace bmd
