#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace neuroeco {

/// Splits [0, n) into `workers` contiguous chunks and runs fn(begin, end)
/// on each. Callers must make results independent of the partition.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = std::min(n, w * chunk), e = std::min(n, (w + 1) * chunk);
        if (b < e) threads.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(std::size_t{0}, std::min(n, chunk));
}

}  // namespace neuroeco
