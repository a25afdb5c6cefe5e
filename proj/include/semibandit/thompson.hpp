#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "semibandit/errors.hpp"
#include "semibandit/family.hpp"
#include "semibandit/history.hpp"
#include "semibandit/posterior.hpp"
#include "semibandit/prior.hpp"
#include "semibandit/rng.hpp"
#include "semibandit/special.hpp"
#include "semibandit/stats.hpp"

namespace semibandit {

// One Thompson step: draw each atom's mean from its posterior, play the
// best arm under the draws. The induced arm law equals Pr[A* = A] under
// the posterior (exactly, given the shared lexicographic tie rule).
inline Arm ts_step(const PosteriorState& state, const ArmFamily& family, RngStream& rng) {
    std::vector<double> draws(state.d());
    for (AtomId x = 0; x < state.d(); ++x) draws[x] = state.sample(x, rng);
    return best_arm(draws, family);
}

// Realized best arm A* under a mean vector, same tie rule as best_arm.
inline Arm argmax_arm(const std::vector<double>& means, const ArmFamily& family) {
    return best_arm(means, family);
}

struct TsConstants {
    double epsilon_ts = 0.0;
    double epsilon_ci = 0.0;  // 99% normal CI radius of the minimizing pair
    double delta_ts = 0.0;
    double delta_ci = 0.0;
    double c_ts = 1.0;
    std::uint64_t n_ts = 0;
    double n_ts_lo = 0.0;  // n at (epsilon + ci)
    double n_ts_hi = 0.0;  // n at (epsilon - ci); inf when the CI crosses 0
    std::uint64_t mc_samples = 0;
    std::uint64_t seed = 0;

    static std::uint64_t formula(std::uint32_t d, double eps, double delta, double c) {
        const double v = c * static_cast<double>(d) * static_cast<double>(d) /
                         (eps * eps) * std::log(1.0 / delta);
        return static_cast<std::uint64_t>(std::ceil(v));
    }
};

// Monte Carlo estimates of epsilon_TS = min_{A != A'} E[(mu(A) - mu(A'))+]
// and delta_TS = min_A Pr[A* = A], with the sample-size rule
// n_TS = ceil(c_TS d^2 epsilon^-2 log(1/delta)).
inline TsConstants estimate_ts_constants(const ProductPrior& prior, const ArmFamily& family,
                                         std::uint64_t mc_samples, double c_ts, RngStream& rng,
                                         std::uint64_t seed = 0,
                                         std::size_t enumeration_budget = 100000) {
    const auto arms = family.enumerate(enumeration_budget);
    const std::size_t K = arms.size();
    if (K < 2) fail(ErrorKind::DegenerateFamily, "epsilon_TS needs at least two arms");
    if (mc_samples < 1000) fail(ErrorKind::ConfigError, "mc_samples must be >= 1e3");

    std::vector<OnlineStat> gap(K * K);
    std::vector<std::uint64_t> best_count(K, 0);
    std::vector<double> mu(K);
    for (std::uint64_t it = 0; it < mc_samples; ++it) {
        const Instance inst = sample_instance(prior, rng);
        for (std::size_t i = 0; i < K; ++i) mu[i] = inst.arm_mean(arms[i]);
        std::size_t best = 0;
        for (std::size_t i = 1; i < K; ++i)
            if (mu[i] > mu[best] || (mu[i] == mu[best] && lex_less(arms[i], arms[best])))
                best = i;
        ++best_count[best];
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = 0; j < K; ++j)
                if (i != j) gap[i * K + j].add(std::max(mu[i] - mu[j], 0.0));
    }

    TsConstants out;
    out.c_ts = c_ts;
    out.mc_samples = mc_samples;
    out.seed = seed;
    std::size_t argmin = 1;  // any i != j cell
    double eps = INFINITY;
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            if (i != j && gap[i * K + j].mean < eps) {
                eps = gap[i * K + j].mean;
                argmin = i * K + j;
            }
    out.epsilon_ts = eps;
    out.epsilon_ci = gap[argmin].ci99_radius();

    double delta = INFINITY;
    for (std::size_t i = 0; i < K; ++i) {
        const double f =
            static_cast<double>(best_count[i]) / static_cast<double>(mc_samples);
        if (f < delta) {
            delta = f;
            out.delta_ci = kZ99 * freq_stderr(f, mc_samples);
        }
    }
    out.delta_ts = delta;
    if (delta == 0.0)
        fail(ErrorKind::DegeneratePrior,
             "some arm was never the best arm at this sample size (assumption "
             "Pr[mu(A') < E mu(A)] > 0 may fail)");
    if (eps <= 0.0)
        fail(ErrorKind::DegeneratePrior, "estimated epsilon_TS is zero");

    out.n_ts = TsConstants::formula(family.d, eps, delta, c_ts);
    out.n_ts_lo = std::ceil(c_ts * family.d * family.d / ((eps + out.epsilon_ci) * (eps + out.epsilon_ci)) *
                            std::log(1.0 / delta));
    const double lo_eps = eps - out.epsilon_ci;
    out.n_ts_hi = lo_eps > 0.0
                      ? std::ceil(c_ts * family.d * family.d / (lo_eps * lo_eps) *
                                  std::log(1.0 / delta))
                      : INFINITY;
    return out;
}

// Diagnostics for the prior assumptions behind the sample-complexity
// corollary: the pairwise-explorability, full-support tail and
// lower-tail-mass conditions. Report only; marginal tail probabilities are
// exact (Beta CDF / discrete sum), the pairwise check is Monte Carlo.
struct PriorAssumptionReport {
    struct PairCheck {
        std::size_t arm;
        std::size_t other;
        double pr_hat = 0.0;
        double stderr = 0.0;
        bool positive = false;
    };
    struct TailCheck {
        AtomId atom;
        double x = 0.0;
        double pr = 0.0;
        double bound = 0.0;
        bool ok = false;
    };
    std::vector<PairCheck> pairwise;
    std::vector<double> pr_above_tau;  // per atom
    bool tau_ok = false;
    std::vector<TailCheck> lower_tail;
    bool lower_tail_ok = false;
    bool pairwise_ok = false;
    double tau = 0.0;
    double alpha_exponent = 0.0;
    std::uint64_t mc_samples = 0;
};

inline double prior_cdf(const PriorSpec& p, double x) {
    if (const auto* b = std::get_if<BetaParams>(&p)) return beta_cdf(b->alpha, b->beta, x);
    const auto& d = std::get<DiscreteSupport>(p);
    double s = 0.0;
    for (std::size_t i = 0; i < d.theta.size(); ++i)
        if (d.theta[i] <= x) s += d.prob[i];
    return s;
}

inline PriorAssumptionReport check_prior_assumptions(const ProductPrior& prior,
                                                     const ArmFamily& family, double tau,
                                                     double alpha_exponent,
                                                     std::uint64_t mc_samples, RngStream& rng,
                                                     std::size_t enumeration_budget = 100000) {
    PriorAssumptionReport rep;
    rep.tau = tau;
    rep.alpha_exponent = alpha_exponent;
    rep.mc_samples = mc_samples;

    const auto arms = family.enumerate(enumeration_budget);
    const std::size_t K = arms.size();

    // (pairwise) Pr[mu(A') < E mu(A)] > 0 for all ordered pairs
    std::vector<double> prior_arm_means(K);
    for (std::size_t i = 0; i < K; ++i) prior_arm_means[i] = prior.arm_prior_mean(arms[i]);
    std::vector<std::uint64_t> below(K * K, 0);
    for (std::uint64_t it = 0; it < mc_samples; ++it) {
        const Instance inst = sample_instance(prior, rng);
        for (std::size_t j = 0; j < K; ++j) {
            const double muj = inst.arm_mean(arms[j]);
            for (std::size_t i = 0; i < K; ++i)
                if (i != j && muj < prior_arm_means[i]) ++below[i * K + j];
        }
    }
    rep.pairwise_ok = true;
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) {
            if (i == j) continue;
            PriorAssumptionReport::PairCheck c;
            c.arm = i;
            c.other = j;
            c.pr_hat = static_cast<double>(below[i * K + j]) / static_cast<double>(mc_samples);
            c.stderr = freq_stderr(c.pr_hat, mc_samples);
            c.positive = c.pr_hat > 0.0;
            rep.pairwise_ok = rep.pairwise_ok && c.positive;
            rep.pairwise.push_back(c);
        }

    // (full support) Pr[theta > tau] > 0 per atom, exact
    rep.tau_ok = true;
    for (AtomId x = 0; x < prior.d(); ++x) {
        const double pr = 1.0 - prior_cdf(prior.atoms[x], tau);
        rep.pr_above_tau.push_back(pr);
        rep.tau_ok = rep.tau_ok && pr > 0.0;
    }

    // (lower tail) Pr[theta < x] > exp(-x^-alpha) at x in {1/4, 1/8, 1/16}
    rep.lower_tail_ok = true;
    for (AtomId a = 0; a < prior.d(); ++a) {
        for (double x : {0.25, 0.125, 0.0625}) {
            PriorAssumptionReport::TailCheck t;
            t.atom = a;
            t.x = x;
            t.pr = prior_cdf(prior.atoms[a], std::nexttoward(x, 0.0));
            t.bound = std::exp(-std::pow(x, -alpha_exponent));
            t.ok = t.pr > t.bound;
            rep.lower_tail_ok = rep.lower_tail_ok && t.ok;
            rep.lower_tail.push_back(t);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Round-by-round runners.
// ---------------------------------------------------------------------------

struct AlgoRun {
    std::vector<Arm> arms;           // chosen arm per round (1-based rounds)
    std::vector<double> round_gap;   // mu(A*) - mu(A^(t)) per round
    History history;                 // full semi-bandit feedback
    std::uint32_t bootstrap_rounds = 0;

    double cumulative_regret() const {
        double s = 0.0;
        for (double g : round_gap) s += g;
        return s;
    }
};

// Initial-exploration algorithms that can precede Thompson sampling. T0
// must be declared before the composite starts (composition requirement);
// the per-atom sample guarantee is checked after the bootstrap runs.
class Bootstrap {
  public:
    virtual ~Bootstrap() = default;
    virtual std::uint32_t declared_t0() const = 0;
    virtual std::uint64_t guaranteed_samples_per_atom() const = 0;
    // Runs the bootstrap; records rounds (if any) into `run` and returns the
    // collected history for the posterior hand-off.
    virtual void run(const ProductPrior& prior, const ArmFamily& family, const Instance& inst,
                     AlgoRun& out, RngStream& rng) const = 0;
};

// Exogenously purchased data: n samples of each atom, zero rounds used.
class ExogenousBootstrap final : public Bootstrap {
  public:
    explicit ExogenousBootstrap(std::uint64_t samples_per_atom)
        : samples_per_atom_(samples_per_atom) {}

    std::uint32_t declared_t0() const override { return 0; }
    std::uint64_t guaranteed_samples_per_atom() const override { return samples_per_atom_; }

    void run(const ProductPrior& prior, const ArmFamily& family, const Instance& inst,
             AlgoRun& out, RngStream& rng) const override {
        (void)prior;
        (void)family;
        for (AtomId x = 0; x < static_cast<AtomId>(inst.theta.size()); ++x) {
            const std::uint64_t s = rng.binomial(samples_per_atom_, inst.theta[x]);
            out.history.counts[x].successes += s;
            out.history.counts[x].failures += samples_per_atom_ - s;
        }
    }

  private:
    std::uint64_t samples_per_atom_;
};

inline void ts_rounds(const ProductPrior& prior, const ArmFamily& family, const Instance& inst,
                      PosteriorState& post, std::uint32_t first_round, std::uint32_t rounds,
                      AlgoRun& out, RngStream& rng, int phase_label = 0) {
    (void)prior;
    const Arm star = argmax_arm(inst.theta, family);
    const double mu_star = inst.arm_mean(star);
    for (std::uint32_t t = 0; t < rounds; ++t) {
        const Arm a = ts_step(post, family, rng);
        const std::uint64_t bits = pull(inst, a, rng);
        out.history.record(first_round + t, a, bits, phase_label, false);
        for (AtomId x : a.atoms()) post.update(x, (bits >> x) & 1ULL);
        out.arms.push_back(a);
        out.round_gap.push_back(mu_star - inst.arm_mean(a));
    }
}

// Bootstrap for T0 declared rounds, then Thompson sampling from the pooled
// posterior. Fails hard if the bootstrap's per-atom guarantee is not met.
inline AlgoRun run_composite(const Bootstrap& bootstrap, const ProductPrior& prior,
                             const ArmFamily& family, const Instance& inst, std::uint32_t T,
                             RngStream& rng) {
    AlgoRun out;
    out.history = History(prior.d());
    bootstrap.run(prior, family, inst, out, rng);
    out.bootstrap_rounds = bootstrap.declared_t0();
    if (out.history.min_atom_samples() < bootstrap.guaranteed_samples_per_atom())
        fail(ErrorKind::BootstrapUnderfilled,
             "bootstrap collected fewer samples than its declared guarantee");
    const Arm star = argmax_arm(inst.theta, family);
    const double mu_star = inst.arm_mean(star);
    // regret for bootstrap rounds that actually occupied rounds
    for (const auto& e : out.history.log) {
        out.arms.push_back(e.arm);
        out.round_gap.push_back(mu_star - inst.arm_mean(e.arm));
    }
    PosteriorState post = PosteriorState::from_prior(prior);
    post.absorb(out.history);
    ts_rounds(prior, family, inst, post, out.bootstrap_rounds + 1, T, out, rng, 1);
    return out;
}

inline AlgoRun run_ts(const ProductPrior& prior, const ArmFamily& family, const Instance& inst,
                      std::uint32_t T, RngStream& rng) {
    AlgoRun out;
    out.history = History(prior.d());
    PosteriorState post = PosteriorState::from_prior(prior);
    ts_rounds(prior, family, inst, post, 1, T, out, rng, 0);
    return out;
}

inline AlgoRun run_uniform_baseline(const ProductPrior& prior, const ArmFamily& family,
                                    const Instance& inst, std::uint32_t T, RngStream& rng,
                                    std::size_t enumeration_budget = 100000) {
    AlgoRun out;
    out.history = History(prior.d());
    const Arm star = argmax_arm(inst.theta, family);
    const double mu_star = inst.arm_mean(star);
    if (family.kind == FamilyKind::AllMSubsets) {
        for (std::uint32_t t = 1; t <= T; ++t) {
            auto picks = rng.sample_without_replacement(family.d, family.m);
            Arm a;
            for (auto x : picks) a.bits |= (1ULL << x);
            out.history.record(t, a, pull(inst, a, rng), 0, false);
            out.arms.push_back(a);
            out.round_gap.push_back(mu_star - inst.arm_mean(a));
        }
        return out;
    }
    const auto arms = family.enumerate(enumeration_budget);
    for (std::uint32_t t = 1; t <= T; ++t) {
        const Arm a = arms[rng.uniform_int(arms.size())];
        out.history.record(t, a, pull(inst, a, rng), 0, false);
        out.arms.push_back(a);
        out.round_gap.push_back(mu_star - inst.arm_mean(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Two arms with an arbitrary joint prior on (mu(A), mu(A')).
// ---------------------------------------------------------------------------

struct TwoArmRun {
    std::vector<int> choices;  // 0 = A, 1 = B per round
    double mu_a = 0.0;         // realized means
    double mu_b = 0.0;
};

// Thompson sampling over the joint posterior. Arm-level rewards are the
// sum of the arm's atom rewards, modeled as Binomial(|arm|, mu/|arm|); the
// posterior conditions on that sum (semi-bandit structure is not assumed).
inline TwoArmRun run_two_arm_correlated(const TwoArmJointPrior& joint, std::uint32_t T,
                                        RngStream& rng) {
    validate_two_arm(joint);
    const std::size_t S = joint.prob.size();
    const std::size_t env = rng.categorical(joint.prob);
    TwoArmRun out;
    out.mu_a = joint.mu_a[env];
    out.mu_b = joint.mu_b[env];

    std::vector<double> log_w(S);
    for (std::size_t i = 0; i < S; ++i)
        log_w[i] = joint.prob[i] > 0.0 ? std::log(joint.prob[i]) : -INFINITY;

    auto log_binom_lik = [](double q, int n, int r) {
        // binomial coefficient omitted: it is common across support points
        double lw = 0.0;
        if (r > 0) lw += q > 0.0 ? r * std::log(q) : -INFINITY;
        if (n - r > 0) lw += q < 1.0 ? (n - r) * std::log1p(-q) : -INFINITY;
        return lw;
    };

    for (std::uint32_t t = 0; t < T; ++t) {
        // normalized posterior weights
        double mx = -INFINITY;
        for (double lw : log_w) mx = std::max(mx, lw);
        std::vector<double> w(S);
        double total = 0.0;
        for (std::size_t i = 0; i < S; ++i) {
            w[i] = std::exp(log_w[i] - mx);
            total += w[i];
        }
        for (auto& x : w) x /= total;
        const std::size_t draw = rng.categorical(w);
        const int choice = joint.mu_a[draw] >= joint.mu_b[draw] ? 0 : 1;  // ties favor A
        out.choices.push_back(choice);

        const int n = choice == 0 ? joint.size_a : joint.size_b;
        const double mu = choice == 0 ? out.mu_a : out.mu_b;
        const int r = static_cast<int>(rng.binomial(static_cast<std::uint64_t>(n), mu / n));
        for (std::size_t i = 0; i < S; ++i) {
            const double q = (choice == 0 ? joint.mu_a[i] : joint.mu_b[i]) / n;
            log_w[i] += log_binom_lik(q, n, r);
        }
    }
    return out;
}

}  // namespace semibandit
