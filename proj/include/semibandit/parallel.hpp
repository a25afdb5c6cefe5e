#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace semibandit {

// Replicate-level parallel map. Replicate k always owns stream_id k, so
// results are identical for any thread count; the output vector is indexed
// by replicate, which makes the reduction order-independent.
template <typename Result, typename Fn>
std::vector<Result> parallel_replicates(std::uint64_t replicates, unsigned threads, Fn&& fn) {
    std::vector<Result> out(replicates);
    if (threads <= 1) {
        for (std::uint64_t r = 0; r < replicates; ++r) out[r] = fn(r);
        return out;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::uint64_t r = next.fetch_add(1);
                if (r >= replicates) return;
                out[r] = fn(r);
            }
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace semibandit
