#include "proprep/util.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace proprep {

double quantile_interp(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 1) return values[0];
    double h = (static_cast<double>(n) - 1.0) * p;
    double lo = std::floor(h);
    std::size_t i = static_cast<std::size_t>(lo);
    if (i >= n - 1) return values[n - 1];
    return values[i] + (h - lo) * (values[i + 1] - values[i]);
}

double quantile_band(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double b = static_cast<double>(values.size());
    double h = (b + 1.0) * p;
    h = std::min(b, std::max(1.0, h));
    double lo = std::floor(h);
    std::size_t i = static_cast<std::size_t>(lo) - 1;
    if (i >= values.size() - 1) return values.back();
    return values[i] + (h - lo) * (values[i + 1] - values[i]);
}

std::string format_double(double x) {
    char buf[40];
    // %.17g round-trips doubles; trim to the shortest representation that
    // still parses back exactly so outputs stay compact and byte-stable.
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t workers = threads <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace proprep
