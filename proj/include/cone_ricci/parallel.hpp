#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace cone_ricci {

/// Worker count: `requested` if nonzero, else hardware concurrency, capped by
/// CONE_RICCI_THREADS when that is set to a positive integer.
inline unsigned worker_count(unsigned requested = 0) {
    unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CONE_RICCI_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
            // unparsable value: ignore the cap
        }
    }
    return n;
}

/// Runs job(i) for i in [0, count) on up to `workers` threads. Every job runs
/// even if another throws; the first exception (lowest index) is rethrown.
template <class Job>
void parallel_for(std::size_t count, unsigned workers, Job&& job) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t spawn = std::min<std::size_t>(workers, count);
    if (spawn <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(spawn);
        for (std::size_t w = 0; w < spawn; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace cone_ricci
