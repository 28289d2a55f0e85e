#include "cak/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cak {

int default_jobs() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

void parallel_for(uint64_t n, int jobs, const std::function<void(uint64_t)>& fn) {
    if (jobs <= 0) jobs = default_jobs();
    if (jobs == 1 || n < 2) {
        for (uint64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    const uint64_t chunk = std::max<uint64_t>(1, n / (static_cast<uint64_t>(jobs) * 16));
    auto worker = [&]() {
        for (;;) {
            uint64_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            uint64_t end = std::min(n, begin + chunk);
            try {
                for (uint64_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace cak
