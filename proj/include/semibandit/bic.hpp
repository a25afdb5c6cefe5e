#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semibandit/errors.hpp"
#include "semibandit/family.hpp"
#include "semibandit/posterior.hpp"
#include "semibandit/prior.hpp"
#include "semibandit/rng.hpp"
#include "semibandit/sequence.hpp"
#include "semibandit/stats.hpp"
#include "semibandit/thompson.hpp"

namespace semibandit {

// ---------------------------------------------------------------------------
// Margin tables for the incentive condition
// E[mu(A) - mu(A') | A^(t) = A] >= 0 for every A' and every A with
// Pr[A^(t) = A] > 0.
// ---------------------------------------------------------------------------

enum class MarginMode { Exact, MonteCarlo };

struct BicMarginRow {
    std::size_t arm = 0;
    double pr_recommend = 0.0;
    std::uint64_t support_count = 0;       // MC conditioning hits
    bool low_support = false;              // < 30 hits
    std::vector<double> margin;            // per competitor index
    std::vector<double> ci_radius;         // 0 in exact mode
};

struct BicMarginTable {
    std::uint32_t round = 0;
    MarginMode mode = MarginMode::Exact;
    std::vector<Arm> arms;
    std::vector<BicMarginRow> rows;  // only arms with positive recommendation mass
    std::uint64_t replicates = 0;

    // worst margin relative to its CI radius; BIC (empirically) holds iff
    // every margin >= -ci_radius
    bool all_pass() const {
        for (const auto& r : rows)
            for (std::size_t j = 0; j < r.margin.size(); ++j)
                if (r.margin[j] < -r.ci_radius[j]) return false;
        return true;
    }

    double min_margin() const {
        double m = INFINITY;
        for (const auto& r : rows)
            for (double x : r.margin) m = std::min(m, x);
        return m;
    }
};

// ---------------------------------------------------------------------------
// Exact oracle for discrete product priors: enumerate every history up to
// round t, weighting rewards by their exact likelihood and the algorithm's
// exact branching probabilities.
// ---------------------------------------------------------------------------

struct ExactEntry {
    Arm arm;
    std::uint64_t bits = 0;
    bool mark = false;  // branch-private flag (e.g. exploration rounds)
};

struct ExactBranch {
    double prob = 1.0;
    Arm arm;
    std::uint64_t state = 0;
    bool mark = false;
};

// A policy whose per-round action distribution can be computed exactly.
// Internal randomness beyond the arm choice (like an exploration-set draw)
// is carried through `state`; branch probabilities must sum to 1.
class ExactPolicy {
  public:
    virtual ~ExactPolicy() = default;
    virtual std::vector<ExactBranch> act(const std::vector<ExactEntry>& history,
                                         std::uint64_t state) const = 0;
};

// Thompson sampling on a discrete product prior: branch probabilities come
// from summation over the product of the per-atom posterior supports, with
// the shared lexicographic tie rule.
class ExactTsPolicy final : public ExactPolicy {
  public:
    ExactTsPolicy(const ProductPrior& prior, const ArmFamily& family,
                  std::size_t enumeration_budget = 100000)
        : prior_(prior), family_(family), arms_(family.enumerate(enumeration_budget)) {
        if (!prior.all_discrete())
            fail(ErrorKind::NonDiscretePrior, "exact TS needs discrete priors");
    }

    std::vector<ExactBranch> act(const std::vector<ExactEntry>& history,
                                 std::uint64_t /*state*/) const override {
        PosteriorState post = PosteriorState::from_prior(prior_);
        for (const auto& e : history)
            for (AtomId x : e.arm.atoms()) post.update(x, (e.bits >> x) & 1ULL);

        const std::uint32_t d = post.d();
        std::vector<std::vector<double>> theta(d), w(d);
        for (AtomId x = 0; x < d; ++x) {
            const auto& dp = std::get<DiscretePosterior>(post.atoms[x]);
            theta[x] = dp.theta;
            w[x] = dp.weights();
        }
        std::map<std::uint64_t, double> mass;  // arm bits -> probability
        std::vector<std::size_t> pick(d, 0);
        std::vector<double> draw(d, 0.0);
        // product-support sweep
        for (;;) {
            double p = 1.0;
            for (AtomId x = 0; x < d; ++x) {
                p *= w[x][pick[x]];
                draw[x] = theta[x][pick[x]];
            }
            if (p > 0.0) mass[best_arm(draw, family_).bits] += p;
            std::uint32_t x = 0;
            while (x < d && ++pick[x] == theta[x].size()) {
                pick[x] = 0;
                ++x;
            }
            if (x == d) break;
        }
        std::vector<ExactBranch> out;
        for (const auto& [bits, p] : mass) out.push_back({p, Arm{bits}, 0, false});
        return out;
    }

  private:
    ProductPrior prior_;
    ArmFamily family_;
    std::vector<Arm> arms_;
};

// Hidden Exploration as an exact policy. The exploration set Q of the
// current phase is the only internal randomness: at a phase boundary the
// policy branches over all C(L*N, N) subsets. Exploitation arms condition
// only on samples revealed by completed phases (marked entries before the
// phase start).
class ExactHiddenExplorationPolicy final : public ExactPolicy {
  public:
    ExactHiddenExplorationPolicy(const ProductPrior& prior, const ArmFamily& family,
                                 std::vector<Arm> sequence, std::uint32_t L, std::uint32_t N,
                                 std::size_t enumeration_budget = 100000)
        : prior_(prior),
          family_(family),
          seq_(std::move(sequence)),
          L_(L),
          N_(N),
          arms_(family.enumerate(enumeration_budget)) {
        if (L_ * N_ > 56) fail(ErrorKind::BudgetExceeded, "phase too long for exact Q packing");
    }

    std::vector<ExactBranch> act(const std::vector<ExactEntry>& history,
                                 std::uint64_t state) const override {
        const std::uint64_t t = history.size();  // 0-based round
        if (t < N_) return {{1.0, seq_[0], 0, true}};
        const std::uint64_t rel = t - N_;
        const std::uint64_t phase_len = static_cast<std::uint64_t>(L_) * N_;
        const std::size_t i = 1 + rel / phase_len;  // 0-based sequence index of V_{i+1}
        const std::uint64_t pos = rel % phase_len;
        if (i >= seq_.size())
            fail(ErrorKind::ConfigError, "round beyond the hidden-exploration schedule");

        const std::uint64_t phase_start = N_ + (i - 1) * phase_len;
        const Arm exploit = exploit_arm(history, phase_start);

        if (pos == 0) {
            // branch over every exploration set of the new phase
            std::vector<ExactBranch> out;
            std::vector<std::uint32_t> comb(N_);
            for (std::uint32_t j = 0; j < N_; ++j) comb[j] = j;
            const double p = 1.0 / static_cast<double>(binomial_coefficient(
                                       static_cast<std::uint32_t>(phase_len), N_));
            for (;;) {
                std::uint64_t qmask = 0;
                for (auto c : comb) qmask |= (1ULL << c);
                const bool explore = (qmask & 1ULL) != 0;
                out.push_back({p, explore ? seq_[i] : exploit, qmask, explore});
                int j = static_cast<int>(N_) - 1;
                while (j >= 0 && comb[static_cast<std::size_t>(j)] ==
                                     phase_len - N_ + static_cast<std::uint32_t>(j))
                    --j;
                if (j < 0) break;
                ++comb[static_cast<std::size_t>(j)];
                for (std::uint32_t k = static_cast<std::uint32_t>(j) + 1; k < N_; ++k)
                    comb[k] = comb[k - 1] + 1;
            }
            return out;
        }
        const bool explore = (state >> pos) & 1ULL;
        return {{1.0, explore ? seq_[i] : exploit, state, explore}};
    }

  private:
    Arm exploit_arm(const std::vector<ExactEntry>& history, std::uint64_t phase_start) const {
        PosteriorState post = PosteriorState::from_prior(prior_);
        for (std::uint64_t r = 0; r < phase_start && r < history.size(); ++r) {
            if (!history[r].mark) continue;
            for (AtomId x : history[r].arm.atoms())
                post.update(x, (history[r].bits >> x) & 1ULL);
        }
        const auto means = post.means();
        Arm b = best_arm(means, family_);
        const double best_v = detail::arm_nu_sum(b, means);
        for (const auto& v : seq_)
            if (detail::arm_nu_sum(v, means) == best_v) return v;
        return b;
    }

    ProductPrior prior_;
    ArmFamily family_;
    std::vector<Arm> seq_;
    std::uint32_t L_;
    std::uint32_t N_;
    std::vector<Arm> arms_;
};

namespace detail {

inline void exact_walk(const ExactPolicy& policy, const Instance& theta,
                       const std::vector<Arm>& arms, std::uint32_t t_round,
                       std::vector<ExactEntry>& history, std::uint64_t state, double path_prob,
                       std::vector<double>& acc, std::uint64_t& nodes, std::uint64_t budget) {
    if (++nodes > budget) fail(ErrorKind::BudgetExceeded, "exact enumeration budget exceeded");
    const auto branches = policy.act(history, state);
    if (history.size() + 1 == t_round) {
        for (const auto& b : branches) {
            const auto it = std::find_if(arms.begin(), arms.end(),
                                         [&](const Arm& a) { return a == b.arm; });
            if (it == arms.end()) fail(ErrorKind::InternalError, "policy played unknown arm");
            acc[static_cast<std::size_t>(it - arms.begin())] += path_prob * b.prob;
        }
        return;
    }
    for (const auto& b : branches) {
        if (b.prob <= 0.0) continue;
        const auto atoms = b.arm.atoms();
        const std::size_t n = atoms.size();
        // all reward strings of the chosen arm
        for (std::uint64_t s = 0; s < (1ULL << n); ++s) {
            double pr = 1.0;
            std::uint64_t bits = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const double th = theta.theta[atoms[j]];
                if ((s >> j) & 1ULL) {
                    pr *= th;
                    bits |= (1ULL << atoms[j]);
                } else {
                    pr *= 1.0 - th;
                }
            }
            if (pr <= 0.0) continue;
            history.push_back({b.arm, bits, b.mark});
            exact_walk(policy, theta, arms, t_round, history, b.state, path_prob * b.prob * pr,
                       acc, nodes, budget);
            history.pop_back();
        }
    }
}

}  // namespace detail

// Exact conditional margins at round t for a discrete product prior:
// enumerates theta support x reward strings x internal branches. Rows are
// produced only for arms recommended with positive probability.
inline BicMarginTable bic_margin_exact(const ExactPolicy& policy, const ProductPrior& prior,
                                       const ArmFamily& family, std::uint32_t t,
                                       std::uint64_t budget = 10000000,
                                       std::size_t enumeration_budget = 100000) {
    if (!prior.all_discrete())
        fail(ErrorKind::NonDiscretePrior, "the exact oracle needs discrete priors");
    if (t < 1) fail(ErrorKind::ConfigError, "round must be >= 1");
    const auto arms = family.enumerate(enumeration_budget);
    const std::size_t K = arms.size();
    const std::uint32_t d = prior.d();

    // product support of theta
    std::vector<const DiscreteSupport*> sup(d);
    for (AtomId x = 0; x < d; ++x) sup[x] = &std::get<DiscreteSupport>(prior.atoms[x]);

    std::vector<double> pr_rec(K, 0.0);
    std::vector<std::vector<double>> gain(K, std::vector<double>(K, 0.0));
    std::uint64_t nodes = 0;

    std::vector<std::size_t> pick(d, 0);
    for (;;) {
        double p_theta = 1.0;
        Instance theta;
        theta.theta.resize(d);
        for (AtomId x = 0; x < d; ++x) {
            p_theta *= sup[x]->prob[pick[x]];
            theta.theta[x] = sup[x]->theta[pick[x]];
        }
        if (p_theta > 0.0) {
            std::vector<double> acc(K, 0.0);
            std::vector<ExactEntry> history;
            detail::exact_walk(policy, theta, arms, t, history, 0, 1.0, acc, nodes, budget);
            std::vector<double> mu(K);
            for (std::size_t i = 0; i < K; ++i) mu[i] = theta.arm_mean(arms[i]);
            for (std::size_t i = 0; i < K; ++i) {
                if (acc[i] <= 0.0) continue;
                pr_rec[i] += p_theta * acc[i];
                for (std::size_t j = 0; j < K; ++j)
                    gain[i][j] += p_theta * acc[i] * (mu[i] - mu[j]);
            }
        }
        std::uint32_t x = 0;
        while (x < d && ++pick[x] == sup[x]->theta.size()) {
            pick[x] = 0;
            ++x;
        }
        if (x == d) break;
    }

    BicMarginTable table;
    table.round = t;
    table.mode = MarginMode::Exact;
    table.arms = arms;
    for (std::size_t i = 0; i < K; ++i) {
        if (pr_rec[i] <= 0.0) continue;  // BIC restricts to Pr[A^(t)=A] > 0
        BicMarginRow row;
        row.arm = i;
        row.pr_recommend = pr_rec[i];
        row.margin.resize(K, 0.0);
        row.ci_radius.resize(K, 0.0);
        for (std::size_t j = 0; j < K; ++j) row.margin[j] = gain[i][j] / pr_rec[i];
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Exact margins for the two-arm correlated case (joint posterior TS with
// Binomial arm-level rewards).
inline BicMarginTable bic_margin_exact_two_arm(const TwoArmJointPrior& joint, std::uint32_t t,
                                               std::uint64_t budget = 10000000) {
    validate_two_arm(joint);
    if (t < 1) fail(ErrorKind::ConfigError, "round must be >= 1");
    const std::size_t S = joint.prob.size();

    // log binomial pmf table helpers
    auto binom_pmf = [](int n, double q, int r) {
        double p = 1.0;
        // multiplicative form keeps it simple at desk-scale n
        double coeff = 1.0;
        for (int i = 0; i < r; ++i) coeff = coeff * (n - i) / (i + 1);
        for (int i = 0; i < r; ++i) p *= q;
        for (int i = 0; i < n - r; ++i) p *= (1.0 - q);
        return coeff * p;
    };

    double pr_rec[2] = {0.0, 0.0};
    double gain[2] = {0.0, 0.0};  // conditional sum of mu(chosen) - mu(other)
    std::uint64_t nodes = 0;

    // recursive enumeration over rounds; posterior = weights over support
    std::function<void(std::size_t, std::uint32_t, const std::vector<double>&, double)> walk =
        [&](std::size_t env, std::uint32_t round, const std::vector<double>& w, double path) {
            if (++nodes > budget)
                fail(ErrorKind::BudgetExceeded, "exact enumeration budget exceeded");
            // TS choice distribution under posterior w: draw a support point,
            // pick the better arm (ties favor A)
            double pr_a = 0.0;
            for (std::size_t i = 0; i < S; ++i)
                if (joint.mu_a[i] >= joint.mu_b[i]) pr_a += w[i];
            if (round == t) {
                const double diff = joint.mu_a[env] - joint.mu_b[env];
                pr_rec[0] += path * pr_a;
                gain[0] += path * pr_a * diff;
                pr_rec[1] += path * (1.0 - pr_a);
                gain[1] += path * (1.0 - pr_a) * (-diff);
                return;
            }
            for (int choice = 0; choice < 2; ++choice) {
                const double pc = choice == 0 ? pr_a : 1.0 - pr_a;
                if (pc <= 0.0) continue;
                const int n = choice == 0 ? joint.size_a : joint.size_b;
                const double mu_env = choice == 0 ? joint.mu_a[env] : joint.mu_b[env];
                for (int r = 0; r <= n; ++r) {
                    const double pr_out = binom_pmf(n, mu_env / n, r);
                    if (pr_out <= 0.0) continue;
                    std::vector<double> w2(S);
                    double total = 0.0;
                    for (std::size_t i = 0; i < S; ++i) {
                        const double q = (choice == 0 ? joint.mu_a[i] : joint.mu_b[i]) / n;
                        total += (w2[i] = w[i] * binom_pmf(n, q, r));
                    }
                    if (total <= 0.0) continue;
                    for (auto& x : w2) x /= total;
                    walk(env, round + 1, w2, path * pc * pr_out);
                }
            }
        };

    for (std::size_t env = 0; env < S; ++env) {
        if (joint.prob[env] <= 0.0) continue;
        std::vector<double> w = joint.prob;
        walk(env, 1, w, joint.prob[env]);
    }

    BicMarginTable table;
    table.round = t;
    table.mode = MarginMode::Exact;
    table.arms = {Arm::of({0}), Arm::of({1})};  // display identities for A and B
    for (int i = 0; i < 2; ++i) {
        if (pr_rec[i] <= 0.0) continue;
        BicMarginRow row;
        row.arm = static_cast<std::size_t>(i);
        row.pr_recommend = pr_rec[i];
        row.margin = {0.0, 0.0};
        row.ci_radius = {0.0, 0.0};
        row.margin[static_cast<std::size_t>(1 - i)] = gain[i] / pr_rec[i];
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Monte Carlo margins for any simulable algorithm.
// ---------------------------------------------------------------------------

// One replicate: fill the chosen-arm index per round (1..T) and the
// realized per-arm means.
using McReplicate =
    std::function<void(RngStream&, std::uint32_t, std::vector<int>&, std::vector<double>&)>;

struct McScenario {
    std::vector<Arm> arms;
    McReplicate replicate;
};

inline std::vector<BicMarginTable> bic_margin_mc(const McScenario& scenario,
                                                 const std::vector<std::uint32_t>& rounds,
                                                 std::uint64_t replicates, std::uint64_t seed,
                                                 std::uint64_t stream_base = 0) {
    if (rounds.empty()) fail(ErrorKind::ConfigError, "empty rounds set");
    if (replicates < 1000) fail(ErrorKind::ConfigError, "replicates must be >= 1e3");
    const std::size_t K = scenario.arms.size();
    const std::uint32_t t_max = *std::max_element(rounds.begin(), rounds.end());

    struct Cell {
        std::uint64_t hits = 0;
        std::vector<double> sum, sumsq;
    };
    std::vector<std::vector<Cell>> cells(rounds.size(), std::vector<Cell>(K));
    for (auto& per_round : cells)
        for (auto& c : per_round) {
            c.sum.assign(K, 0.0);
            c.sumsq.assign(K, 0.0);
        }

    std::vector<int> arm_ix;
    std::vector<double> mu;
    for (std::uint64_t rep = 0; rep < replicates; ++rep) {
        RngStream rng(seed, stream_base + rep);
        arm_ix.clear();
        mu.clear();
        scenario.replicate(rng, t_max, arm_ix, mu);
        for (std::size_t ri = 0; ri < rounds.size(); ++ri) {
            const std::uint32_t t = rounds[ri];
            const int a = arm_ix[t - 1];
            auto& c = cells[ri][static_cast<std::size_t>(a)];
            ++c.hits;
            for (std::size_t j = 0; j < K; ++j) {
                const double diff = mu[static_cast<std::size_t>(a)] - mu[j];
                c.sum[j] += diff;
                c.sumsq[j] += diff * diff;
            }
        }
    }

    std::vector<BicMarginTable> tables;
    for (std::size_t ri = 0; ri < rounds.size(); ++ri) {
        BicMarginTable table;
        table.round = rounds[ri];
        table.mode = MarginMode::MonteCarlo;
        table.arms = scenario.arms;
        table.replicates = replicates;
        for (std::size_t i = 0; i < K; ++i) {
            const auto& c = cells[ri][i];
            if (c.hits == 0) continue;  // NoSupport: Pr[A^(t)=A] = 0 at this sample size
            BicMarginRow row;
            row.arm = i;
            row.support_count = c.hits;
            row.low_support = c.hits < 30;
            row.pr_recommend =
                static_cast<double>(c.hits) / static_cast<double>(replicates);
            row.margin.resize(K, 0.0);
            row.ci_radius.resize(K, 0.0);
            const double n = static_cast<double>(c.hits);
            for (std::size_t j = 0; j < K; ++j) {
                const double mean = c.sum[j] / n;
                row.margin[j] = mean;
                const double var =
                    c.hits > 1 ? std::max(c.sumsq[j] / n - mean * mean, 0.0) * n / (n - 1.0)
                               : 0.0;
                row.ci_radius[j] = i == j ? 0.0 : kZ99 * std::sqrt(var / n);
            }
            table.rows.push_back(std::move(row));
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

// Ready-made scenario: semi-bandit algorithm on a product prior.
inline McScenario make_semibandit_scenario(
    const ProductPrior& prior, const ArmFamily& family,
    std::function<AlgoRun(const Instance&, std::uint32_t, RngStream&)> algo,
    std::size_t enumeration_budget = 100000) {
    McScenario sc;
    sc.arms = family.enumerate(enumeration_budget);
    const auto arms = sc.arms;
    sc.replicate = [prior, arms, algo](RngStream& rng, std::uint32_t T,
                                       std::vector<int>& arm_ix, std::vector<double>& mu) {
        const Instance inst = sample_instance(prior, rng);
        const AlgoRun run = algo(inst, T, rng);
        arm_ix.resize(T);
        for (std::uint32_t t = 0; t < T; ++t) {
            const Arm a = run.arms[t];
            int ix = -1;
            for (std::size_t i = 0; i < arms.size(); ++i)
                if (arms[i] == a) {
                    ix = static_cast<int>(i);
                    break;
                }
            if (ix < 0) fail(ErrorKind::InternalError, "algorithm played an arm outside the family");
            arm_ix[t] = ix;
        }
        mu.resize(arms.size());
        for (std::size_t i = 0; i < arms.size(); ++i) mu[i] = inst.arm_mean(arms[i]);
    };
    return sc;
}

inline McScenario make_two_arm_scenario(const TwoArmJointPrior& joint) {
    McScenario sc;
    sc.arms = {Arm::of({0}), Arm::of({1})};
    sc.replicate = [joint](RngStream& rng, std::uint32_t T, std::vector<int>& arm_ix,
                           std::vector<double>& mu) {
        const TwoArmRun run = run_two_arm_correlated(joint, T, rng);
        arm_ix = run.choices;
        mu = {run.mu_a, run.mu_b};
    };
    return sc;
}

// ---------------------------------------------------------------------------
// Property (P) empirical verification.
// ---------------------------------------------------------------------------

struct PropertyPPhaseCheck {
    std::uint32_t phase = 0;
    double pr_hat = 0.0;
    double stderr = 0.0;
    double rho_target = 0.0;      // rho_P (may underflow; log comparison used)
    double log_event_prob = 0.0;  // exact Pr[E_{i-1}] in logs
    bool pass = false;
};

// Per phase i: sample datasets H_{i-1}^N (N samples of each arm
// V_1..V_{i-1}), compute X_i^N exactly from the Beta posterior and compare
// Pr[X_i^N >= tau_P] against rho_P at three standard errors. force_event
// replaces the sampled rewards with the all-zero event E_{i-1}, under which
// X_i^N >= tau_P must hold deterministically.
inline std::vector<PropertyPPhaseCheck> property_p_empirical(
    const ProductPrior& prior, const ArmFamily& family, const PropertyPReport& report,
    std::uint64_t N, std::uint64_t replicates, RngStream& rng, bool force_event = false,
    std::size_t enumeration_budget = 100000) {
    if (N < report.n_p) fail(ErrorKind::ConfigError, "N must be >= n_P");
    const auto arms = family.enumerate(enumeration_budget);
    const std::uint32_t d = prior.d();
    std::vector<PropertyPPhaseCheck> out;

    for (std::uint32_t i = 1; i <= report.kappa; ++i) {
        const Arm& vi = report.sequence[i - 1];
        std::uint64_t covered = 0;
        for (std::uint32_t j = 0; j + 1 < i; ++j) covered |= report.sequence[j].bits;

        std::uint64_t hits = 0;
        for (std::uint64_t rep = 0; rep < replicates; ++rep) {
            const Instance inst = sample_instance(prior, rng);
            std::vector<std::uint64_t> succ(d, 0), tot(d, 0);
            for (std::uint32_t j = 0; j + 1 < i; ++j) {
                for (AtomId x : report.sequence[j].atoms()) {
                    tot[x] += N;
                    if (!force_event) succ[x] += rng.binomial(N, inst.theta[x]);
                }
            }
            std::vector<double> pm(d);
            for (AtomId x = 0; x < d; ++x) {
                const BetaParams& b = prior.beta_at(x);
                pm[x] = (b.alpha + static_cast<double>(succ[x])) /
                        (b.alpha + b.beta + static_cast<double>(tot[x]));
            }
            const double own = detail::arm_nu_sum(vi, pm);
            double x_in = INFINITY;
            for (const auto& a : arms) {
                if (a == vi) continue;
                x_in = std::min(x_in, own - detail::arm_nu_sum(a, pm));
            }
            if (x_in >= report.tau_p) ++hits;
        }
        PropertyPPhaseCheck c;
        c.phase = i;
        c.pr_hat = static_cast<double>(hits) / static_cast<double>(replicates);
        c.stderr = freq_stderr(c.pr_hat, replicates);
        c.rho_target = report.rho_p;
        c.log_event_prob =
            log_event_probability_exact(prior, Arm{covered | vi.bits}, report.n_p);
        // log-domain comparison so underflowed rho values stay meaningful
        c.pass = std::log(std::max(c.pr_hat + 3.0 * c.stderr, 0.0)) >= report.log_rho_p;
        out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Anti-concentration experiment (uniform nu draws).
// ---------------------------------------------------------------------------

struct EsseenResult {
    double threshold = 0.0;   // delta / (2 * 8^d)
    double bound = 0.0;       // delta / 2^d
    double freq_below = 0.0;
    double stderr = 0.0;
    bool premise_ok = true;   // all intervals non-degenerate
    bool pass = false;
};

// Draw nu_l ~ Uniform[a_l, b_l] independently, compute
// tau(n) = min_{A != A'} |sum_A nu - sum_A' nu| over the family, and test
// Pr[tau < delta / (2 8^d)] <= delta / 2^d (+ 3 stderr).
inline EsseenResult esseen_experiment(const std::vector<std::pair<double, double>>& intervals,
                                      const ArmFamily& family, double delta,
                                      std::uint64_t replicates, RngStream& rng,
                                      std::size_t enumeration_budget = 100000) {
    const std::uint32_t d = family.d;
    if (intervals.size() != d) fail(ErrorKind::ConfigError, "need one interval per atom");
    for (const auto& [a, b] : intervals)
        if (!(0.0 <= a && a <= b && b <= 1.0))
            fail(ErrorKind::ConfigError, "intervals must satisfy 0 <= a <= b <= 1");

    EsseenResult res;
    for (const auto& [a, b] : intervals) res.premise_ok = res.premise_ok && (b > a);
    res.threshold = delta / (2.0 * std::pow(8.0, static_cast<double>(d)));
    res.bound = delta / std::pow(2.0, static_cast<double>(d));

    const auto arms = family.enumerate(enumeration_budget);
    std::vector<double> nu_draw(d), sums(arms.size());
    std::uint64_t below = 0;
    for (std::uint64_t rep = 0; rep < replicates; ++rep) {
        for (AtomId x = 0; x < d; ++x)
            nu_draw[x] = rng.uniform(intervals[x].first, intervals[x].second);
        for (std::size_t i = 0; i < arms.size(); ++i)
            sums[i] = detail::arm_nu_sum(arms[i], nu_draw);
        std::sort(sums.begin(), sums.end());
        double tau = INFINITY;
        for (std::size_t i = 0; i + 1 < sums.size(); ++i)
            tau = std::min(tau, sums[i + 1] - sums[i]);
        if (tau < res.threshold) ++below;
    }
    res.freq_below = static_cast<double>(below) / static_cast<double>(replicates);
    res.stderr = freq_stderr(res.freq_below, replicates);
    res.pass = res.freq_below <= res.bound + 3.0 * res.stderr;
    return res;
}

// ---------------------------------------------------------------------------
// Harris inequality spot check: E[(1 - theta)^n] >= (E[1 - theta])^n.
// ---------------------------------------------------------------------------

struct HarrisCheck {
    AtomId atom = 0;
    double lhs = 0.0;        // exact E[(1-theta)^n]
    double rhs = 0.0;        // (1 - prior mean)^n
    double mc_estimate = 0.0;
    bool pass = false;
};

inline std::vector<HarrisCheck> harris_spotcheck(const ProductPrior& prior, std::uint64_t n,
                                                 const Arm& atoms, std::uint64_t replicates,
                                                 RngStream& rng) {
    if (n < 1) fail(ErrorKind::ConfigError, "n must be >= 1");
    std::vector<HarrisCheck> out;
    for (AtomId x : atoms.atoms()) {
        HarrisCheck c;
        c.atom = x;
        if (is_beta(prior.atoms[x])) {
            const BetaParams& b = prior.beta_at(x);
            c.lhs = std::exp(log_polya_all_zeros(b.alpha, b.beta, n));
        } else {
            const auto& ds = std::get<DiscreteSupport>(prior.atoms[x]);
            for (std::size_t i = 0; i < ds.theta.size(); ++i)
                c.lhs += ds.prob[i] * std::pow(1.0 - ds.theta[i], static_cast<double>(n));
        }
        c.rhs = std::pow(1.0 - prior.mean(x), static_cast<double>(n));
        OnlineStat mc;
        for (std::uint64_t rep = 0; rep < replicates; ++rep)
            mc.add(std::pow(1.0 - sample_theta(prior.atoms[x], rng), static_cast<double>(n)));
        c.mc_estimate = mc.mean;
        c.pass = c.lhs >= c.rhs - 1e-12;
        out.push_back(c);
    }
    return out;
}

}  // namespace semibandit
