#include "fida/parallel.hpp"

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace fida {

namespace {
std::atomic<int> g_max_threads{0};  // 0: use hardware concurrency
}

int max_threads() {
    int n = g_max_threads.load();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void set_max_threads(int n) { g_max_threads.store(n); }

void parallel_for(int n, const std::function<void(int)>& body) {
    int workers = std::min(max_threads(), n);
    if (workers <= 1 || n < 4) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};

    auto run = [&]() {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                body(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();

    if (error) std::rethrow_exception(error);
}

}  // namespace fida
