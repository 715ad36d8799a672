#ifndef MVLAB_PARALLEL_HPP
#define MVLAB_PARALLEL_HPP

#include <cstddef>
#include <thread>
#include <vector>

namespace mvlab {

// Chunked parallel loop. body(i) must write only to slot i (or otherwise
// disjoint state); reductions over the results are done serially by the
// caller, so the outcome is identical for every worker count.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& body) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = n * t / w;
        const std::size_t hi = n * (t + 1) / w;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace mvlab

#endif
