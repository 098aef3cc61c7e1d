#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tomopipe {

/// Calls body(begin, end) over contiguous chunks of [0, n) on up to `workers`
/// threads. Chunk boundaries depend only on n and workers, and each index is
/// visited by exactly one call, so results are independent of scheduling.
template <typename Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    const std::size_t chunks = std::min<std::size_t>(std::max(1u, workers), n);
    if (chunks <= 1) {
        if (n > 0) body(std::size_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errors(chunks);
    std::vector<std::jthread> threads;
    threads.reserve(chunks - 1);
    auto run = [&](std::size_t c) {
        const std::size_t begin = n * c / chunks;
        const std::size_t end = n * (c + 1) / chunks;
        try {
            body(begin, end);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };
    for (std::size_t c = 1; c < chunks; ++c) threads.emplace_back(run, c);
    run(0);
    threads.clear();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace tomopipe
