#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace ccnn {

// Process-wide worker count for batch/prediction loops. Default 1.
int thread_count();
void set_thread_count(int n);

// Runs body(chunk_index, begin, end) over [0, n) split into fixed-size
// chunks. Chunk boundaries depend only on chunk_size, never on the worker
// count, so any chunk-indexed reduction done by the caller afterwards is
// identical at any thread count.
template <class Body>
void parallel_chunks(std::size_t n, std::size_t chunk_size, const Body& body) {
    if (n == 0) return;
    std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    int workers = thread_count();
    if (workers <= 1 || chunks == 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            body(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= chunks) break;
            body(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        }
    };
    std::vector<std::thread> pool;
    int spawn = std::min<std::size_t>(workers, chunks) - 1;
    pool.reserve(spawn);
    for (int t = 0; t < spawn; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
    return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace ccnn
