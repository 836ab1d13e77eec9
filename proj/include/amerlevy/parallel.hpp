#ifndef AMERLEVY_PARALLEL_HPP
#define AMERLEVY_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace amerlevy {

/// Thread count from AMERLEVY_THREADS, falling back to the hardware count.
inline int default_thread_count() {
    if (const char* env = std::getenv("AMERLEVY_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/**
 * Runs fn(begin, end) over contiguous chunks of [0, n).
 *
 * Callers write results per index and reduce serially afterwards, so the
 * outcome never depends on the number of threads.
 */
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 0) threads = default_thread_count();
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers <= 1) {
        if (n > 0) fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, w, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace amerlevy

#endif  // AMERLEVY_PARALLEL_HPP
