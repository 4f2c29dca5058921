#include "rankfs/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rankfs {

namespace {

std::atomic<std::size_t> g_default_workers{1};
thread_local bool t_inside_worker = false;

} // namespace

void set_default_workers(std::size_t workers)
{
    g_default_workers.store(std::max<std::size_t>(1, workers));
}

std::size_t default_workers()
{
    return g_default_workers.load();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers)
{
    if (workers == 0) {
        workers = default_workers();
    }
    workers = std::min(workers, n);
    if (workers <= 1 || t_inside_worker) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t first_error_index = n;

    auto work = [&] {
        t_inside_worker = true;
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
            }
        }
        t_inside_worker = false;
    };

    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) {
        threads.emplace_back(work);
    }
    work();
    threads.clear();

    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace rankfs
