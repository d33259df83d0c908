#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace robinhood {

// Thread count resolution: explicit request wins, then the ROBINHOOD_THREADS
// environment variable, then hardware concurrency.
inline unsigned resolve_threads(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ROBINHOOD_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Deterministic parallel trial runner. Trials are split into fixed-size
// blocks; worker threads claim blocks through an atomic counter, and the
// per-block accumulators are merged in block order afterwards. Results are
// therefore independent of the thread count and of scheduling. `body` is
// called as body(trial_begin, trial_end, acc) and must derive any RNG it
// needs from (seed, trial index) itself.
template <class Acc, class Body>
Acc run_trials(std::uint64_t trials, unsigned threads, std::uint64_t block_size, Body&& body) {
    if (block_size == 0) block_size = 1;
    const std::uint64_t blocks = (trials + block_size - 1) / block_size;
    std::vector<Acc> per_block(static_cast<std::size_t>(blocks));
    std::atomic<std::uint64_t> next_block{0};

    auto worker = [&]() {
        for (;;) {
            const std::uint64_t b = next_block.fetch_add(1);
            if (b >= blocks) return;
            const std::uint64_t t0 = b * block_size;
            const std::uint64_t t1 = std::min(trials, t0 + block_size);
            body(t0, t1, per_block[static_cast<std::size_t>(b)]);
        }
    };

    const unsigned nthreads = std::max(1u, resolve_threads(threads));
    if (nthreads == 1 || blocks <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    Acc total;
    for (auto& blk : per_block) total.merge(blk);
    return total;
}

}  // namespace robinhood
