#include "mdcontour/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mdcontour {

namespace {

std::atomic<unsigned> g_override{0};

unsigned env_cap()
{
    const char* env = std::getenv("MDCONTOUR_THREADS");
    if (env == nullptr)
        return 0;
    try {
        const long v = std::stol(env);
        return v > 0 ? static_cast<unsigned>(v) : 0;
    } catch (const std::exception&) {
        return 0;
    }
}

} // namespace

unsigned worker_count()
{
    if (const unsigned o = g_override.load(); o > 0)
        return o;
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const unsigned cap = env_cap(); cap > 0)
        n = std::min(n, cap);
    return n;
}

void set_worker_count(unsigned n) { g_override.store(n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body)
{
    if (n == 0)
        return;
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        body(0, n);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    auto run = [&](std::size_t begin, std::size_t end) {
        try {
            body(begin, end);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure)
                failure = std::current_exception();
        }
    };
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end)
            threads.emplace_back(run, begin, end);
    }
    run(0, std::min(n, chunk));
    threads.clear();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace mdcontour
