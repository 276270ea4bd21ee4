#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace tubekit::par {

inline int thread_count() {
    if (const char* env = std::getenv("TUBEKIT_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? int(hc) : 1;
}

// Splits [0, n) into one contiguous slice per worker and runs
// fn(worker, begin, end) on each. Each worker owns a fixed slice, so callers
// can keep per-worker accumulators and merge them in worker order for
// bit-reproducible reductions.
inline void parallel_slices(long n, const std::function<void(int, long, long)>& fn,
                            int workers = 0) {
    if (workers <= 0) workers = thread_count();
    workers = int(std::min<long>(workers, std::max<long>(n, 1)));
    if (workers <= 1) {
        fn(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    long chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        long b = t * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back(fn, t, b, e);
    }
    for (auto& th : pool) th.join();
}

}  // namespace tubekit::par
