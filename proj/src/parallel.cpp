#include "evtfair/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace evtfair {

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
    std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

unsigned thread_budget() {
    if (const char* env = std::getenv("EVTFAIR_THREADS")) {
        try {
            const long v = std::stol(env);
            return v <= 0 ? 1U : static_cast<unsigned>(v);
        } catch (...) {
            return 1U;
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

// Loops started from a worker thread run inline instead of spawning more threads.
thread_local bool in_worker = false;

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = in_worker ? 1 : std::min<std::size_t>(thread_budget(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            in_worker = true;
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace evtfair
