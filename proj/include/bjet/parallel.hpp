#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace bjet {

/**
 * Evaluate f(i) for i in [0, n) on a small worker pool. Results land at their own index,
 * so the output is independent of scheduling. The first exception is rethrown.
 */
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, F f, unsigned workers = 0)
{
    std::vector<R> out(n);
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = unsigned(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    auto run = [&] {
        for (;;) {
            std::size_t i = next++;
            if (i >= n || failed) return;
            try {
                out[i] = f(i);
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
                return;
            }
        }
    };
    if (workers <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
    return out;
}

} // namespace bjet
