#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gexp {

/// Worker count: GEXP_THREADS caps it, 0 or unset means hardware concurrency.
inline std::size_t worker_count() {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GEXP_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return hw;
}

/**
 * Runs body(i) for i in [begin, end) over contiguous chunks. Each index is
 * processed exactly once, so results written per index do not depend on
 * the number of workers.
 */
template <class Body>
void parallel_for(std::size_t begin, std::size_t end, Body&& body, std::size_t min_chunk = 256) {
    if (end <= begin) return;
    const std::size_t count = end - begin;
    const std::size_t workers = std::min(worker_count(), (count + min_chunk - 1) / min_chunk);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (std::size_t i = begin; i < std::min(end, begin + chunk); ++i) body(i);
}

}  // namespace gexp
