#include "lbmcf/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace lbmcf {

namespace {
std::atomic<int> g_threads{1};
constexpr std::size_t kMinChunk = 2048;
}  // namespace

void set_threads(int n) { g_threads.store(std::max(1, n)); }

int threads() { return g_threads.load(); }

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t nt = static_cast<std::size_t>(threads());
    nt = std::min(nt, (count + kMinChunk - 1) / kMinChunk);
    if (nt <= 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt - 1);
    std::size_t chunk = (count + nt - 1) / nt;
    std::vector<std::exception_ptr> errs(nt);
    for (std::size_t k = 1; k < nt; ++k) {
        std::size_t b = k * chunk, e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, k, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                errs[k] = std::current_exception();
            }
        });
    }
    try {
        fn(0, std::min(count, chunk));
    } catch (...) {
        errs[0] = std::current_exception();
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

double pairwise_sum(const double* v, std::size_t count) {
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += v[i];
        return s;
    }
    std::size_t half = count / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, count - half);
}

double max_abs(const Field& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace lbmcf
