#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace netdecode {

/// Runs fn(0..n_tasks) on up to n_threads workers. Tasks must be
/// independent and write only to their own result slot; results are merged
/// by index, never by completion order, so output is identical for any
/// thread count. If tasks throw, the exception with the lowest task index
/// is rethrown after all workers drain.
template <typename Fn>
void parallel_for(std::size_t n_tasks, std::size_t n_threads, Fn&& fn) {
    if (n_tasks == 0) return;
    if (n_threads <= 1 || n_tasks == 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min(n_threads, n_tasks);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n_tasks);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_tasks) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace netdecode
