#pragma once

#include <boost/math/special_functions/beta.hpp>

#include <cmath>

#include "semibandit/rng.hpp"

namespace semibandit {

// Pr[X <= x] for X ~ Beta(a, b).
inline double beta_cdf(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return boost::math::ibeta(a, b, x);
}

inline double beta_quantile(double a, double b, double p) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    return boost::math::ibeta_inv(a, b, p);
}

// Exact sample from Beta(a, b) conditioned on X <= cap, via inverse CDF.
// Distributionally identical to rejection sampling from the prior.
inline double truncated_beta(double a, double b, double cap, RngStream& rng) {
    const double mass = beta_cdf(a, b, cap);
    return beta_quantile(a, b, rng.uniform() * mass);
}

// log Pr[n consecutive Bernoulli samples are all 0] under Beta(a, b)
// (Polya-urn marginal): sum_k log((b + k) / (a + b + k)).
inline double log_polya_all_zeros(double a, double b, std::uint64_t n) {
    double acc = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k);
        acc += std::log((b + kk) / (a + b + kk));
    }
    return acc;
}

}  // namespace semibandit
