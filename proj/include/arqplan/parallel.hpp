#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace arqplan {

// Worker count: hardware concurrency capped by the ARQPLAN_THREADS
// environment variable (values < 1 mean single-threaded).
inline int thread_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("ARQPLAN_THREADS")) {
        try {
            int cap = std::stoi(env);
            n = cap < 1 ? 1 : (cap < n ? cap : n);
        } catch (...) {
            // unparsable value: ignore and keep the hardware default
        }
    }
    return n;
}

// Splits [0, total) into contiguous chunks, one worker thread per chunk.
// fn(chunk_index, begin, end) must not touch shared mutable state; callers
// merge per-chunk results afterwards so the outcome is thread-count
// independent.
template <typename Fn>
void parallel_chunks(long long total, Fn&& fn) {
    int workers = thread_count();
    if (total < workers) workers = total > 0 ? static_cast<int>(total) : 1;
    if (workers <= 1) {
        fn(0, 0LL, total);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    long long base = total / workers, extra = total % workers, begin = 0;
    for (int w = 0; w < workers; ++w) {
        long long len = base + (w < extra ? 1 : 0);
        pool.emplace_back(fn, w, begin, begin + len);
        begin += len;
    }
    for (auto& t : pool) t.join();
}

inline int chunk_count_for(long long total) {
    int workers = thread_count();
    if (total < workers) workers = total > 0 ? static_cast<int>(total) : 1;
    return workers < 1 ? 1 : workers;
}

} // namespace arqplan
