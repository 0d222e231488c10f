#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace uclearn {

// Worker cap: UCLEARN_WORKERS when set, else hardware concurrency (max 8).
inline int worker_count() {
    int hw = int(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    int w = hw < 8 ? hw : 8;
    if (const char* env = std::getenv("UCLEARN_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) w = v < hw ? v : hw;
    }
    return w;
}

// Runs fn(i) for i in [0, n). Each call must write only to its own slot, so
// the result is independent of scheduling and worker count.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    const int workers = worker_count() < n ? worker_count() : n;
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace uclearn
