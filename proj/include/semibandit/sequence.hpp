#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semibandit/errors.hpp"
#include "semibandit/family.hpp"
#include "semibandit/history.hpp"
#include "semibandit/posterior.hpp"
#include "semibandit/prior.hpp"
#include "semibandit/rng.hpp"
#include "semibandit/special.hpp"
#include "semibandit/thompson.hpp"

namespace semibandit {

enum class PropertyPVariant { FixedSize, General };

// Prior-dependent exploration constants for the arm-sequence mechanism,
// with the full nu tables kept for auditability.
struct PropertyPReport {
    PropertyPVariant variant = PropertyPVariant::FixedSize;
    std::uint64_t n_p = 0;
    double tau_p = 0.0;
    double rho_p = 0.0;       // may underflow to 0; log_rho_p is authoritative
    double log_rho_p = 0.0;
    std::uint32_t kappa = 0;
    bool kappa_unbounded = false;
    std::vector<Arm> sequence;
    double L = 0.0;   // ceil(1 + (mu0_max - mu0_min) / (tau * rho)); may overflow to inf
    double T0 = 0.0;  // ceil(kappa * n_p * (1 + d) / (tau * rho))
    bool degenerate = false;
    std::string degenerate_reason;
    bool tau_lower_confidence = false;  // general variant under a restricted pattern set
    double n0_corollary = 0.0;          // corollary bound at unit constants (report only)
    std::vector<double> nu0;            // nu_l(0) per atom
    std::vector<double> nu_np;          // nu_l(n_p) per atom
    double mu0_max = 0.0;
    double mu0_min = 0.0;
};

namespace detail {

inline void require_beta_sorted(const ProductPrior& prior) {
    if (!prior.all_beta()) fail(ErrorKind::NotBeta, "sequence constants need Beta priors");
    if (!prior.sorted_by_mean())
        fail(ErrorKind::ConfigError,
             "atoms must be sorted by prior mean (canonicalize the problem first)");
}

// Sum of nu values over an arm's atoms in ascending order. Both the tau_P
// minimization and the conditional-gap evaluation go through here, so the
// exact >= comparison between them is bit-stable.
inline double arm_nu_sum(const Arm& arm, const std::vector<double>& nu_values) {
    double s = 0.0;
    for (AtomId x : arm.atoms()) s += nu_values[x];
    return s;
}

}  // namespace detail

struct SequenceResult {
    std::vector<Arm> sequence;
    std::optional<std::uint32_t> kappa;  // nullopt: cap exceeded (possibly infinite)
};

// The arm sequence V_1, V_2, ...: pretend every atom covered by earlier
// arms has n all-zero samples and take the posterior-best arm; stop once
// the arms cover all atoms.
inline SequenceResult build_sequence(const ProductPrior& prior, const ArmFamily& family,
                                     std::uint64_t n, std::uint32_t cap) {
    detail::require_beta_sorted(prior);
    if (cap < 1) fail(ErrorKind::ConfigError, "cap must be >= 1");
    const std::uint32_t d = prior.d();
    const std::uint64_t all = d == 64 ? ~0ULL : ((1ULL << d) - 1);

    SequenceResult out;
    std::uint64_t covered = 0;
    std::vector<double> nu_cur(d);
    while (out.sequence.size() < cap) {
        for (AtomId x = 0; x < d; ++x)
            nu_cur[x] = nu(prior.beta_at(x), ((covered >> x) & 1ULL) ? static_cast<double>(n) : 0.0);
        const Arm next = best_arm(nu_cur, family);
        out.sequence.push_back(next);
        covered |= next.bits;
        if (covered == all) {
            out.kappa = static_cast<std::uint32_t>(out.sequence.size());
            return out;
        }
    }
    return out;  // cap exceeded; kappa possibly infinite for this n
}

namespace detail {

// Shared tail of the two constants_* builders once n_p and tau_p are known.
inline void finish_report(PropertyPReport& rep, const ProductPrior& prior,
                          const ArmFamily& family, std::uint32_t kappa_cap,
                          std::size_t enumeration_budget) {
    const std::uint32_t d = prior.d();
    rep.nu0.resize(d);
    rep.nu_np.resize(d);
    for (AtomId x = 0; x < d; ++x) {
        rep.nu0[x] = nu(prior.beta_at(x), 0.0);
        rep.nu_np[x] = nu(prior.beta_at(x), static_cast<double>(rep.n_p));
    }

    const double theta1 = prior.mean(0);
    rep.log_rho_p = static_cast<double>(d) * static_cast<double>(rep.n_p) * std::log1p(-theta1);
    rep.rho_p = std::exp(rep.log_rho_p);

    auto seq = build_sequence(prior, family, rep.n_p, kappa_cap);
    rep.sequence = seq.sequence;
    if (seq.kappa) {
        rep.kappa = *seq.kappa;
    } else {
        rep.kappa_unbounded = true;
        rep.degenerate = true;
        rep.degenerate_reason = "sequence did not cover all atoms within the cap";
    }

    const auto arms = family.enumerate(enumeration_budget);
    rep.mu0_max = -INFINITY;
    rep.mu0_min = INFINITY;
    for (const auto& a : arms) {
        const double mu0 = prior.arm_prior_mean(a);
        rep.mu0_max = std::max(rep.mu0_max, mu0);
        rep.mu0_min = std::min(rep.mu0_min, mu0);
    }

    if (rep.tau_p <= 0.0) {
        rep.degenerate = true;
        if (rep.degenerate_reason.empty()) rep.degenerate_reason = "tau_p is zero";
    }
    if (!(rep.rho_p > 0.0)) {
        // keep the log value; the closed-form product underflowed
        if (!(rep.log_rho_p > -INFINITY)) {
            rep.degenerate = true;
            if (rep.degenerate_reason.empty()) rep.degenerate_reason = "rho_p is zero";
        }
    }

    if (!rep.degenerate) {
        const double tr = rep.tau_p * rep.rho_p;
        rep.L = std::ceil(1.0 + (rep.mu0_max - rep.mu0_min) / tr);
        rep.T0 = std::ceil(static_cast<double>(rep.kappa) * static_cast<double>(rep.n_p) *
                           (1.0 + static_cast<double>(d)) / tr);
    }
}

}  // namespace detail

// Fixed-size variant (all subsets of a given size m):
//   n_P  = ceil(beta_d / alpha_d) * max_l ceil(alpha_l)
//   tau_P = min_{l != l', n, n' in {0, n_P}} |nu_l(n) - nu_l'(n')|
//   rho_P = (1 - theta_1^0)^(d * n_P)
inline PropertyPReport constants_fixed_size(const ProductPrior& prior, const ArmFamily& family,
                                            std::size_t enumeration_budget = 100000) {
    detail::require_beta_sorted(prior);
    if (family.kind != FamilyKind::AllMSubsets)
        fail(ErrorKind::NotFixedSize, "fixed-size constants need an all-m-subsets family");
    if (family.d != prior.d()) fail(ErrorKind::ConfigError, "family/prior atom count mismatch");

    PropertyPReport rep;
    rep.variant = PropertyPVariant::FixedSize;
    const std::uint32_t d = prior.d();
    const BetaParams& last = prior.beta_at(d - 1);
    double max_ceil_alpha = 0.0;
    for (AtomId x = 0; x < d; ++x)
        max_ceil_alpha = std::max(max_ceil_alpha, std::ceil(prior.beta_at(x).alpha));
    rep.n_p = static_cast<std::uint64_t>(std::ceil(last.beta / last.alpha) * max_ceil_alpha);

    double tau = INFINITY;
    const double np = static_cast<double>(rep.n_p);
    for (AtomId a = 0; a < d; ++a) {
        for (AtomId b = 0; b < d; ++b) {
            if (a == b) continue;
            for (double na : {0.0, np}) {
                for (double nb : {0.0, np}) {
                    tau = std::min(tau, std::abs(nu(prior.beta_at(a), na) - nu(prior.beta_at(b), nb)));
                }
            }
        }
    }
    rep.tau_p = tau;

    detail::finish_report(rep, prior, family,
                          (family.d + family.m - 1) / family.m + 1, enumeration_budget);
    if (!rep.kappa_unbounded && rep.kappa > (family.d + family.m - 1) / family.m)
        fail(ErrorKind::InternalError, "kappa exceeded ceil(d/m)");
    return rep;
}

// General variant (any enumerable family):
//   n_P  = ceil((alpha_d + beta_d) / alpha_d) * max_l ceil(alpha_l) * d
//   tau_P = min over A != A' and n in {0, n_P}^d of
//           |sum_{l in A} nu_l(n_l) - sum_{l' in A'} nu_l'(n_l')|
//   (single shared coverage vector, per the corrected appendix statement)
inline PropertyPReport constants_general(const ProductPrior& prior, const ArmFamily& family,
                                         std::uint32_t exact_budget = 12,
                                         std::size_t enumeration_budget = 100000) {
    detail::require_beta_sorted(prior);
    if (family.d != prior.d()) fail(ErrorKind::ConfigError, "family/prior atom count mismatch");

    PropertyPReport rep;
    rep.variant = PropertyPVariant::General;
    const std::uint32_t d = prior.d();
    const BetaParams& last = prior.beta_at(d - 1);
    double max_ceil_alpha = 0.0;
    for (AtomId x = 0; x < d; ++x)
        max_ceil_alpha = std::max(max_ceil_alpha, std::ceil(prior.beta_at(x).alpha));
    rep.n_p = static_cast<std::uint64_t>(std::ceil((last.alpha + last.beta) / last.alpha) *
                                         max_ceil_alpha * static_cast<double>(d));

    const auto arms = family.enumerate(enumeration_budget);
    const double np = static_cast<double>(rep.n_p);

    // coverage patterns to minimize over: all 2^d when d is small enough,
    // otherwise the patterns realized along the sequence plus the two
    // extremes (reported as lower-confidence)
    std::vector<std::uint64_t> patterns;
    if (d <= exact_budget && d <= 20) {
        patterns.resize(1ULL << d);
        for (std::uint64_t z = 0; z < patterns.size(); ++z) patterns[z] = z;
    } else {
        rep.tau_lower_confidence = true;
        auto seq = build_sequence(prior, family, rep.n_p, d + 1);
        std::uint64_t covered = 0;
        patterns.push_back(0);
        for (const auto& v : seq.sequence) {
            covered |= v.bits;
            patterns.push_back(covered);
        }
        patterns.push_back(d == 64 ? ~0ULL : ((1ULL << d) - 1));
        std::sort(patterns.begin(), patterns.end());
        patterns.erase(std::unique(patterns.begin(), patterns.end()), patterns.end());
    }

    double tau = INFINITY;
    std::vector<double> nu_z(d);
    std::vector<double> sums(arms.size());
    for (std::uint64_t z : patterns) {
        for (AtomId x = 0; x < d; ++x)
            nu_z[x] = nu(prior.beta_at(x), ((z >> x) & 1ULL) ? np : 0.0);
        for (std::size_t i = 0; i < arms.size(); ++i)
            sums[i] = detail::arm_nu_sum(arms[i], nu_z);
        std::sort(sums.begin(), sums.end());
        for (std::size_t i = 0; i + 1 < sums.size(); ++i)
            tau = std::min(tau, sums[i + 1] - sums[i]);
    }
    rep.tau_p = tau;

    detail::finish_report(rep, prior, family, d + 1, enumeration_budget);
    if (!rep.kappa_unbounded && rep.kappa > d)
        fail(ErrorKind::InternalError, "kappa exceeded d under the general n_P");
    return rep;
}

// Exact Pr[the first n samples of every atom in `atoms` are all zero]
// under independent Beta priors (Polya-urn marginals). Returned in logs;
// the linear-scale value may underflow.
inline double log_event_probability_exact(const ProductPrior& prior, const Arm& atoms,
                                          std::uint64_t n) {
    double acc = 0.0;
    for (AtomId x : atoms.atoms()) {
        const BetaParams& b = prior.beta_at(x);
        acc += log_polya_all_zeros(b.alpha, b.beta, n);
    }
    return acc;
}

inline double event_probability_exact(const ProductPrior& prior, const Arm& atoms,
                                      std::uint64_t n) {
    return std::exp(log_event_probability_exact(prior, atoms, n));
}

// X_i^N evaluated on the all-zero dataset: covered atoms sit at nu_l(N),
// uncovered at nu_l(0), and the gap to the best competitor is returned.
// Equals at least tau_P for every phase (deterministically).
inline double conditional_gap(const ProductPrior& prior, const ArmFamily& family,
                              const std::vector<Arm>& sequence, std::uint32_t i,
                              std::uint64_t N, std::size_t enumeration_budget = 100000) {
    detail::require_beta_sorted(prior);
    if (i < 1 || i > sequence.size()) fail(ErrorKind::ConfigError, "phase index out of range");
    const std::uint32_t d = prior.d();
    std::uint64_t covered = 0;
    for (std::uint32_t j = 0; j + 1 < i; ++j) covered |= sequence[j].bits;
    std::vector<double> nu_z(d);
    for (AtomId x = 0; x < d; ++x)
        nu_z[x] = nu(prior.beta_at(x), ((covered >> x) & 1ULL) ? static_cast<double>(N) : 0.0);
    const Arm& vi = sequence[i - 1];
    const double own = detail::arm_nu_sum(vi, nu_z);
    double gap = INFINITY;
    for (const auto& a : family.enumerate(enumeration_budget)) {
        if (a == vi) continue;
        gap = std::min(gap, own - detail::arm_nu_sum(a, nu_z));
    }
    return gap;
}

// ---------------------------------------------------------------------------
// Hidden Exploration: N rounds of V_1, then per phase i an exploration set
// Q of N rounds (uniform among L*N) playing V_i while the rest play the
// posterior-best arm given the previously revealed exploration samples.
// ---------------------------------------------------------------------------

struct HiddenExplorationPlan {
    std::vector<Arm> sequence;
    std::uint64_t N = 0;
    std::uint64_t L = 0;

    std::uint64_t total_rounds() const {
        if (sequence.empty()) return 0;
        return N + (sequence.size() - 1) * L * N;
    }
    // the T0 = kappa * N * L accounting used by the reduction theorem
    std::uint64_t theorem_rounds() const { return sequence.size() * L * N; }
};

inline HiddenExplorationPlan hidden_exploration_plan(const PropertyPReport& report,
                                                     std::uint64_t N) {
    if (report.degenerate)
        fail(ErrorKind::DegenerateConstants, "constants degenerate: " + report.degenerate_reason);
    if (N < report.n_p) fail(ErrorKind::ConfigError, "N must be >= n_P");
    if (!(report.L < 1e15)) fail(ErrorKind::BudgetExceeded, "L too large to simulate");
    HiddenExplorationPlan plan;
    plan.sequence = report.sequence;
    plan.N = N;
    plan.L = static_cast<std::uint64_t>(report.L);
    return plan;
}

// One replicate. Ties in the exploitation arm favor the smallest sequence
// index; arms outside the sequence fall back to the lexicographic rule.
// record_rewards=false skips the feedback of exploitation rounds (they are
// never revealed to later agents), which the BIC Monte Carlo relies on.
inline AlgoRun run_hidden_exploration(const ProductPrior& prior, const ArmFamily& family,
                                      const HiddenExplorationPlan& plan, const Instance& inst,
                                      RngStream& rng, bool record_rewards = true) {
    const std::uint32_t d = prior.d();
    AlgoRun out;
    out.history = History(d);
    const Arm star = argmax_arm(inst.theta, family);
    const double mu_star = inst.arm_mean(star);

    PosteriorState revealed = PosteriorState::from_prior(prior);
    std::uint32_t round = 1;
    auto play = [&](const Arm& a, int phase, bool exploration) {
        if (exploration || record_rewards) {
            const std::uint64_t bits = pull(inst, a, rng);
            if (exploration)
                for (AtomId x : a.atoms()) revealed.update(x, (bits >> x) & 1ULL);
            out.history.record(round, a, bits, phase, exploration);
        }
        out.arms.push_back(a);
        out.round_gap.push_back(mu_star - inst.arm_mean(a));
        ++round;
    };

    const auto& seq = plan.sequence;
    for (std::uint64_t t = 0; t < plan.N; ++t) play(seq[0], 1, true);

    for (std::size_t i = 1; i < seq.size(); ++i) {
        const auto means = revealed.means();
        Arm exploit = best_arm(means, family);
        const double best_v = detail::arm_nu_sum(exploit, means);
        for (const auto& v : seq) {
            if (detail::arm_nu_sum(v, means) == best_v) {
                exploit = v;
                break;
            }
        }
        const std::uint64_t phase_len = plan.L * plan.N;
        auto q = rng.sample_without_replacement(static_cast<std::uint32_t>(phase_len),
                                                static_cast<std::uint32_t>(plan.N));
        std::size_t qi = 0;
        for (std::uint64_t p = 0; p < phase_len; ++p) {
            const bool explore = qi < q.size() && q[qi] == p;
            if (explore) ++qi;
            play(explore ? seq[i] : exploit, static_cast<int>(i) + 1, explore);
        }
    }
    out.bootstrap_rounds = 0;
    return out;
}

// Bootstrap adapter so Hidden Exploration can precede Thompson sampling.
class HiddenExplorationBootstrap final : public Bootstrap {
  public:
    explicit HiddenExplorationBootstrap(HiddenExplorationPlan plan) : plan_(std::move(plan)) {}

    std::uint32_t declared_t0() const override {
        return static_cast<std::uint32_t>(plan_.total_rounds());
    }
    std::uint64_t guaranteed_samples_per_atom() const override { return plan_.N; }

    void run(const ProductPrior& prior, const ArmFamily& family, const Instance& inst,
             AlgoRun& out, RngStream& rng) const override {
        AlgoRun inner = run_hidden_exploration(prior, family, plan_, inst, rng, true);
        out.history = std::move(inner.history);
    }

  private:
    HiddenExplorationPlan plan_;
};

// ---------------------------------------------------------------------------
// Corollary bound reports (unit constants; no algorithmic effect).
// ---------------------------------------------------------------------------

struct CorollaryReport {
    PropertyPVariant variant = PropertyPVariant::FixedSize;
    double c0 = 0.0;      // c1 for the general variant
    double c = 0.0;       // c2 for the general variant
    double c_prime = 0.0; // c3 for the general variant
    double phi = 0.0;
    double n0 = 0.0;
    bool mean_ok = false;       // E[theta_l] <= c'
    bool ceil_ok = false;       // the ceil-product bound <= c0
    bool tau_ok = false;        // computed tau_P >= threshold (Omega constant 1)
    double tau_threshold = 0.0;
};

inline CorollaryReport corollary_n0(const ProductPrior& prior, const PropertyPReport& base,
                                    double c0, double c, double c_prime) {
    detail::require_beta_sorted(prior);
    CorollaryReport rep;
    rep.variant = base.variant;
    rep.c0 = c0;
    rep.c = c;
    rep.c_prime = c_prime;
    const std::uint32_t d = prior.d();

    rep.mean_ok = true;
    for (AtomId x = 0; x < d; ++x) rep.mean_ok = rep.mean_ok && prior.mean(x) <= c_prime;

    double worst = 0.0;
    for (AtomId a = 0; a < d; ++a) {
        const BetaParams& pa = prior.beta_at(a);
        const double ratio = base.variant == PropertyPVariant::FixedSize
                                 ? std::ceil(pa.beta / pa.alpha)
                                 : std::ceil((pa.alpha + pa.beta) / pa.alpha);
        for (AtomId b = 0; b < d; ++b)
            worst = std::max(worst, ratio * std::ceil(prior.beta_at(b).alpha));
    }
    rep.ceil_ok = worst <= c0;

    rep.phi = c * std::pow(1.0 - c_prime, -c0);
    if (base.variant == PropertyPVariant::FixedSize) {
        rep.tau_threshold = std::pow(c, -static_cast<double>(d));
        rep.n0 = c0 * static_cast<double>(d) * std::pow(rep.phi, static_cast<double>(d));
    } else {
        rep.tau_threshold = std::pow(c, -static_cast<double>(d) * static_cast<double>(d));
        rep.n0 = c0 * std::pow(static_cast<double>(d), 3.0) *
                 std::pow(rep.phi, static_cast<double>(d) * static_cast<double>(d));
    }
    rep.tau_ok = base.tau_p >= rep.tau_threshold;
    return rep;
}

}  // namespace semibandit
