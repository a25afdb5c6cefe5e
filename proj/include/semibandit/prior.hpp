#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>
#include <vector>

#include "semibandit/arm.hpp"
#include "semibandit/errors.hpp"
#include "semibandit/family.hpp"
#include "semibandit/rng.hpp"

namespace semibandit {

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const { return alpha / (alpha + beta); }
};

// Finite support on [0, 1]; probabilities sum to 1 within 1e-12.
struct DiscreteSupport {
    std::vector<double> theta;
    std::vector<double> prob;

    double mean() const {
        double s = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) s += theta[i] * prob[i];
        return s;
    }
};

using PriorSpec = std::variant<BetaParams, DiscreteSupport>;

inline bool is_beta(const PriorSpec& p) { return std::holds_alternative<BetaParams>(p); }

inline double prior_mean(const PriorSpec& p) {
    if (const auto* b = std::get_if<BetaParams>(&p)) return b->mean();
    return std::get<DiscreteSupport>(p).mean();
}

inline void validate_prior_spec(const PriorSpec& p) {
    if (const auto* b = std::get_if<BetaParams>(&p)) {
        if (!(b->alpha > 0.0) || !(b->beta > 0.0))
            fail(ErrorKind::ConfigError, "Beta parameters must be positive");
        return;
    }
    const auto& d = std::get<DiscreteSupport>(p);
    if (d.theta.empty() || d.theta.size() != d.prob.size())
        fail(ErrorKind::ConfigError, "discrete support malformed");
    double total = 0.0;
    bool positive_mass_above_zero = false;
    for (std::size_t i = 0; i < d.theta.size(); ++i) {
        if (d.theta[i] < 0.0 || d.theta[i] > 1.0)
            fail(ErrorKind::ConfigError, "discrete support point outside [0, 1]");
        if (d.prob[i] < 0.0) fail(ErrorKind::ConfigError, "negative probability");
        if (d.theta[i] > 0.0 && d.prob[i] > 0.0) positive_mass_above_zero = true;
        total += d.prob[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
        fail(ErrorKind::ConfigError, "discrete probabilities must sum to 1");
    if (!positive_mass_above_zero)
        fail(ErrorKind::ConfigError, "atom must satisfy Pr[theta > 0] > 0");
}

// Independent per-atom prior P = P_1 x ... x P_d.
struct ProductPrior {
    std::vector<PriorSpec> atoms;

    std::uint32_t d() const { return static_cast<std::uint32_t>(atoms.size()); }

    double mean(AtomId atom) const { return prior_mean(atoms[atom]); }

    bool all_beta() const {
        for (const auto& a : atoms)
            if (!is_beta(a)) return false;
        return true;
    }

    bool all_discrete() const {
        for (const auto& a : atoms)
            if (is_beta(a)) return false;
        return true;
    }

    const BetaParams& beta_at(AtomId atom) const {
        if (!is_beta(atoms[atom])) fail(ErrorKind::NotBeta, "atom prior is not Beta");
        return std::get<BetaParams>(atoms[atom]);
    }

    double arm_prior_mean(const Arm& a) const {
        double s = 0.0;
        for (AtomId x : a.atoms()) s += mean(x);
        return s;
    }

    // Non-increasing prior means, the ordering all sequence claims assume.
    bool sorted_by_mean() const {
        for (std::uint32_t i = 0; i + 1 < d(); ++i)
            if (mean(i) < mean(i + 1) - 1e-15) return false;
        return true;
    }
};

inline void validate_prior(const ProductPrior& prior) {
    if (prior.atoms.empty()) fail(ErrorKind::ConfigError, "prior has no atoms");
    for (const auto& a : prior.atoms) validate_prior_spec(a);
}

// Realized mean-reward vector theta; arm means are additive over atoms.
struct Instance {
    std::vector<double> theta;

    double arm_mean(const Arm& a) const {
        double s = 0.0;
        for (AtomId x : a.atoms()) s += theta[x];
        return s;
    }
};

inline double sample_theta(const PriorSpec& p, RngStream& rng) {
    if (const auto* b = std::get_if<BetaParams>(&p)) return rng.beta(b->alpha, b->beta);
    const auto& d = std::get<DiscreteSupport>(p);
    return d.theta[rng.categorical(d.prob)];
}

inline Instance sample_instance(const ProductPrior& prior, RngStream& rng) {
    Instance inst;
    inst.theta.reserve(prior.atoms.size());
    for (const auto& a : prior.atoms) inst.theta.push_back(sample_theta(a, rng));
    return inst;
}

// Finite joint prior over the mean rewards of two arms (no semi-bandit
// structure assumed; the two arms may have arbitrary correlation).
struct TwoArmJointPrior {
    int size_a = 1;  // |A|, arm-level rewards are sums of that many Bernoullis
    int size_b = 1;
    std::vector<double> mu_a;
    std::vector<double> mu_b;
    std::vector<double> prob;
};

inline void validate_two_arm(const TwoArmJointPrior& j) {
    if (j.mu_a.empty() || j.mu_a.size() != j.mu_b.size() || j.mu_a.size() != j.prob.size())
        fail(ErrorKind::ConfigError, "two-arm joint support malformed");
    if (j.size_a < 1 || j.size_b < 1) fail(ErrorKind::ConfigError, "arm sizes must be >= 1");
    double total = 0.0;
    for (std::size_t i = 0; i < j.prob.size(); ++i) {
        if (j.prob[i] < 0.0) fail(ErrorKind::ConfigError, "negative probability");
        if (j.mu_a[i] < 0.0 || j.mu_a[i] > j.size_a || j.mu_b[i] < 0.0 || j.mu_b[i] > j.size_b)
            fail(ErrorKind::ConfigError, "joint mean outside [0, |arm|]");
        total += j.prob[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
        fail(ErrorKind::ConfigError, "joint probabilities must sum to 1");
}

// A prior/family pair in canonical atom order: atoms sorted by prior mean
// (non-increasing), ties keeping the original order. internal_to_user maps
// canonical indices back to the indices the caller supplied.
struct Problem {
    ProductPrior prior;
    ArmFamily family;
    std::vector<AtomId> user_to_internal;
    std::vector<AtomId> internal_to_user;
};

inline Problem canonicalize(const ProductPrior& user_prior, const ArmFamily& user_family) {
    validate_prior(user_prior);
    const std::uint32_t d = user_prior.d();
    if (d != user_family.d)
        fail(ErrorKind::ConfigError, "prior atom count does not match family");
    std::vector<AtomId> order(d);
    std::iota(order.begin(), order.end(), AtomId{0});
    std::stable_sort(order.begin(), order.end(), [&](AtomId a, AtomId b) {
        return user_prior.mean(a) > user_prior.mean(b);
    });
    Problem p;
    p.internal_to_user = order;
    p.user_to_internal.assign(d, 0);
    for (std::uint32_t i = 0; i < d; ++i) p.user_to_internal[order[i]] = i;
    p.prior.atoms.reserve(d);
    for (std::uint32_t i = 0; i < d; ++i) p.prior.atoms.push_back(user_prior.atoms[order[i]]);
    p.family = user_family.permuted(p.user_to_internal);
    return p;
}

}  // namespace semibandit
