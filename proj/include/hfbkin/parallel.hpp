#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace hfbkin {

// HFBKIN_THREADS caps the worker count, 0 means run inline.
inline unsigned worker_count()
{
    static const unsigned count = [] {
        unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        const char *env = std::getenv("HFBKIN_THREADS");
        if (!env || !*env)
            return hw;
        long v = std::strtol(env, nullptr, 10);
        if (v <= 0)
            return 1u;
        return static_cast<unsigned>(std::min<long>(v, hw));
    }();
    return count;
}

// Calls fn(i) for i in [0, n). Each index is owned by exactly one worker,
// so writes to out[i] stay deterministic regardless of thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn &&fn, std::size_t grain = 64)
{
    unsigned workers = worker_count();
    if (workers <= 1 || n < 2 * grain) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n / grain));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi)
            break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i)
                fn(i);
        });
    }
    for (auto &t : pool)
        t.join();
}

} // namespace hfbkin
