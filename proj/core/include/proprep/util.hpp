#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace proprep {

// Fitted probabilities are clamped away from {0,1} so weight denominators
// stay finite wherever positivity is asserted.
inline constexpr double kProbClamp = 1e-15;

inline double clamp_prob(double p) {
    return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

inline double expit(double x) {
    double p = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    return clamp_prob(p);
}

inline double logit(double p) {
    p = clamp_prob(p);
    return std::log(p / (1.0 - p));
}

// Compensated (Kahan) accumulator for reproducible reductions.
class KahanSum {
public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// splitmix64 finalizer; the basis of the counter RNG.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based uniform draw keyed by (seed, subject, interval, slot).
// Independent of evaluation order, so parallel generation is reproducible.
inline double counter_u01(std::uint64_t seed, std::uint64_t subject,
                          std::uint64_t interval, std::uint64_t slot) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ subject);
    h = mix64(h ^ (interval << 20));
    h = mix64(h ^ (slot << 40));
    // 53-bit mantissa in (0,1); never exactly 0 or 1.
    return (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

// Quantile with linear interpolation at h = (n-1)p + 1 on the sorted sample
// (the convention that puts the 35th percentile of 1..100 at 35.65).
double quantile_interp(std::vector<double> values, double p);

// Percentile band rank h = (B+1)p, interpolated and clamped to [1, B].
double quantile_band(std::vector<double> values, double p);

// Shortest-round-trip decimal formatting; identical inputs give identical text.
std::string format_double(double x);

// Runs fn(i) for i in [0, n) on at most `threads` workers. Falls back to the
// calling thread for threads <= 1 or tiny ranges.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace proprep
