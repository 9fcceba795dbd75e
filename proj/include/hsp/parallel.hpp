#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hsp {

/// Run fn(0..n_tasks-1) across up to `max_threads` worker threads
/// (hardware concurrency when 0). Tasks must write to disjoint slots; the
/// first exception thrown by any task is rethrown after all workers join.
inline void parallel_for(int n_tasks, const std::function<void(int)>& fn, int max_threads = 0) {
    if (n_tasks <= 0) return;
    int workers = max_threads > 0 ? max_threads : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (workers > n_tasks) workers = n_tasks;
    if (workers == 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const int task = next.fetch_add(1);
                if (task >= n_tasks || failed.load()) return;
                try {
                    fn(task);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace hsp
