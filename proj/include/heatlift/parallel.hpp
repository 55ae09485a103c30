#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace heatlift {

/// Number of work chunks used by every ensemble loop. Fixed (not tied to
/// hardware concurrency) so reductions combine partial results in the same
/// order on every machine and run bit-exact.
inline constexpr int kEnsembleChunks = 16;

/// Runs fn(chunk_index, begin, end) over [0,n) split into kEnsembleChunks
/// contiguous ranges, one thread per non-empty chunk. Within a chunk the
/// items are processed sequentially in index order; callers keep per-chunk
/// state and merge it in chunk order after this returns.
template <class Fn>
void for_each_chunk(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    std::vector<std::thread> workers;
    workers.reserve(kEnsembleChunks);
    for (int c = 0; c < kEnsembleChunks; ++c) {
        const std::size_t begin = n * static_cast<std::size_t>(c) / kEnsembleChunks;
        const std::size_t end = n * static_cast<std::size_t>(c + 1) / kEnsembleChunks;
        if (begin == end) continue;
        workers.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
    }
    for (auto& t : workers) t.join();
}

}  // namespace heatlift
