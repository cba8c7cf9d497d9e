#include "nrt/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nrt {

std::size_t worker_count() {
    static const std::size_t count = [] {
        if (const char* env = std::getenv("NRT_THREADS")) {
            const long v = std::atol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return static_cast<std::size_t>(hw ? hw : 1);
    }();
    return count;
}

void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    grain = std::max<std::size_t>(grain, 1);

    std::size_t workers = std::min(worker_count(), (n + grain - 1) / grain);
    if (workers <= 1) {
        body(0, n);
        return;
    }

    const std::size_t chunk = (n + workers - 1) / workers;
    std::exception_ptr error;
    std::mutex error_mutex;

    auto run = [&](std::size_t lo, std::size_t hi) {
        try {
            body(lo, hi);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        if (lo >= n) break;
        pool.emplace_back(run, lo, std::min(n, lo + chunk));
    }
    run(0, std::min(n, chunk));
    for (auto& t : pool) t.join();

    if (error) std::rethrow_exception(error);
}

}  // namespace nrt
