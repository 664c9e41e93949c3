#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

// Block-partitioned parallel loops. Results must never depend on the thread
// count, so callers only use this where iterations write disjoint outputs;
// reductions are handled by the caller merging fixed-order partial buffers.

namespace cslsm::threads {

/// Worker count: CSLSM_THREADS env var caps it (0 or unset = hardware).
int thread_count();

/// Runs fn(i) for i in [0, n). Iterations must be independent.
template <class F>
void parallel_for(std::int64_t n, F&& fn) {
    if (n <= 0) return;
    const int want = thread_count();
    const int workers = static_cast<int>(n < want ? n : want);
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = n * w / workers;
        const std::int64_t hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi, w] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace cslsm::threads
