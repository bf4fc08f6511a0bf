#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cmf {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be written
// to per-index slots so the outcome does not depend on scheduling. The first
// exception thrown is rethrown after all workers join.
inline void parallel_for(long n, int workers, const std::function<void(long)>& fn) {
    if (n <= 0) return;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<long>(n, 256))));
    if (workers == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (long i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace cmf
