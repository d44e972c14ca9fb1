#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace pointfield {

/// Runs body(i) for every i in [0, count) using `workers` threads.
/// Iterations are statically partitioned into contiguous blocks, so code
/// that writes results into per-index slots produces identical output for
/// any worker count. Results must only be combined after this returns.
template <class Body>
void parallel_for(std::size_t count, int workers, Body&& body) {
    if (workers < 1) throw std::invalid_argument("parallel_for: workers < 1");
    if (count == 0) return;
    const auto n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    if (n_threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run_block = [&](std::size_t lo, std::size_t hi) {
        try {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        const std::size_t lo = count * t / n_threads;
        const std::size_t hi = count * (t + 1) / n_threads;
        pool.emplace_back(run_block, lo, hi);
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace pointfield
