#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace lqg {

// Worker count: LQGLAB_WORKERS if set, otherwise the hardware concurrency.
unsigned default_workers();

// Resolve a requested worker count (0 means default).
unsigned resolve_workers(unsigned requested);

struct Chunk {
    std::size_t index;
    std::size_t begin;
    std::size_t end;
};

// Chunk boundaries depend only on n and chunk_size, never on the worker count.
std::vector<Chunk> make_chunks(std::size_t n, std::size_t chunk_size);

// Evaluates f(0..n_tasks-1) on a thread pool; results are returned in task order.
template <class F>
auto parallel_map(std::size_t n_tasks, unsigned workers, F&& f)
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<R> out(n_tasks);
    const unsigned w = std::max(1u, std::min<unsigned>(resolve_workers(workers),
                                                       static_cast<unsigned>(std::max<std::size_t>(n_tasks, 1))));
    if (w == 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) out[i] = f(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_tasks) return;
            try {
                out[i] = f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n_tasks);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned t = 0; t < w; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace lqg
