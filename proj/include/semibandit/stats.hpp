#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace semibandit {

// z for a two-sided 99% normal interval; all confidence radii in the
// library use this level.
inline constexpr double kZ99 = 2.5758293035489004;

// Streaming mean/variance accumulator (Welford).
struct OnlineStat {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stderr_mean() const {
        return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
    double ci99_radius() const { return kZ99 * stderr_mean(); }
};

// Standard error of a Bernoulli frequency estimate.
inline double freq_stderr(double p_hat, std::uint64_t n) {
    if (n == 0) return std::numeric_limits<double>::infinity();
    return std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / static_cast<double>(n));
}

}  // namespace semibandit
