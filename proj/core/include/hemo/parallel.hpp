#pragma once

#include <thread>
#include <vector>

namespace hemo {

// Static-partition parallel loop. Each worker owns a contiguous index block
// and writes only its own slots, so results are bitwise-identical for any
// thread count. threads <= 1 runs inline.
template <typename F>
void parallel_for(int n, int threads, F&& body) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int begin = w * chunk;
        const int end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] {
            for (int i = begin; i < end; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace hemo
