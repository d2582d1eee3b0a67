#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fkpp {

inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{0};
    return n;
}

// 0 means "not set": fall back to FKPP_THREADS, then 1.
inline void set_threads(int n) { thread_setting() = std::max(0, n); }

inline int threads() {
    int n = thread_setting();
    if (n > 0) return n;
    if (const char* env = std::getenv("FKPP_THREADS")) {
        try {
            n = std::stoi(env);
        } catch (...) {
            n = 1;
        }
    }
    return std::max(1, n);
}

// Runs f(i) for i in [0, n) over contiguous blocks. Each index is handled by
// exactly one thread, so per-index results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads()), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    const std::size_t block = (n + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t lo = t * block, hi = std::min(n, lo + block);
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace fkpp
