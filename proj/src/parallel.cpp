#include "dirac_bvp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dbvp {

namespace {

int initial_threads() {
    if (const char* env = std::getenv("DIRAC_BVP_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

std::atomic<int>& threads_setting() {
    static std::atomic<int> value{initial_threads()};
    return value;
}

} // namespace

int thread_count() { return threads_setting().load(); }

void set_thread_count(int threads) { threads_setting().store(std::max(1, threads)); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const auto workers =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, thread_count())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace dbvp
