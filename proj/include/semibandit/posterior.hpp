#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>
#include <vector>

#include "semibandit/arm.hpp"
#include "semibandit/errors.hpp"
#include "semibandit/family.hpp"
#include "semibandit/graph.hpp"
#include "semibandit/history.hpp"
#include "semibandit/prior.hpp"
#include "semibandit/rng.hpp"

namespace semibandit {

// nu_l(n): posterior mean of a Beta-prior atom after n samples that all
// returned reward 0. Strictly decreasing in n; nu(0) is the prior mean.
inline double nu(const BetaParams& p, double n) { return p.alpha / (p.alpha + p.beta + n); }

struct BetaPosterior {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const { return alpha / (alpha + beta); }
};

// Discrete posterior kept in log space so long reward sequences cannot
// underflow; weights are normalized on read.
struct DiscretePosterior {
    std::vector<double> theta;
    std::vector<double> log_w;

    std::vector<double> weights() const {
        double mx = -INFINITY;
        for (double lw : log_w) mx = std::max(mx, lw);
        std::vector<double> w(log_w.size(), 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < log_w.size(); ++i) {
            w[i] = std::isfinite(mx) ? std::exp(log_w[i] - mx) : 0.0;
            total += w[i];
        }
        for (auto& x : w) x /= total;
        return w;
    }

    double mean() const {
        auto w = weights();
        double s = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) s += w[i] * theta[i];
        return s;
    }
};

using AtomPosterior = std::variant<BetaPosterior, DiscretePosterior>;

struct PosteriorState {
    std::vector<AtomPosterior> atoms;

    static PosteriorState from_prior(const ProductPrior& prior) {
        PosteriorState s;
        s.atoms.reserve(prior.atoms.size());
        for (const auto& a : prior.atoms) {
            if (const auto* b = std::get_if<BetaParams>(&a)) {
                s.atoms.push_back(BetaPosterior{b->alpha, b->beta});
            } else {
                const auto& d = std::get<DiscreteSupport>(a);
                DiscretePosterior dp;
                dp.theta = d.theta;
                dp.log_w.reserve(d.prob.size());
                for (double p : d.prob)
                    dp.log_w.push_back(p > 0.0 ? std::log(p) : -INFINITY);
                s.atoms.push_back(std::move(dp));
            }
        }
        return s;
    }

    std::uint32_t d() const { return static_cast<std::uint32_t>(atoms.size()); }

    void update(AtomId atom, bool reward) { update_counts(atom, reward ? 1 : 0, reward ? 0 : 1); }

    // Conjugate update with s successes and f failures of one atom.
    void update_counts(AtomId atom, std::uint64_t s, std::uint64_t f) {
        if (auto* b = std::get_if<BetaPosterior>(&atoms[atom])) {
            b->alpha += static_cast<double>(s);
            b->beta += static_cast<double>(f);
            return;
        }
        auto& dp = std::get<DiscretePosterior>(atoms[atom]);
        for (std::size_t i = 0; i < dp.theta.size(); ++i) {
            const double th = dp.theta[i];
            if (s > 0) dp.log_w[i] += th > 0.0 ? s * std::log(th) : -INFINITY;
            if (f > 0) dp.log_w[i] += th < 1.0 ? f * std::log1p(-th) : -INFINITY;
        }
    }

    void absorb(const History& h) {
        for (AtomId x = 0; x < d(); ++x) update_counts(x, h.counts[x].successes, h.counts[x].failures);
    }

    double mean(AtomId atom) const {
        if (const auto* b = std::get_if<BetaPosterior>(&atoms[atom])) return b->mean();
        return std::get<DiscretePosterior>(atoms[atom]).mean();
    }

    std::vector<double> means() const {
        std::vector<double> m(atoms.size());
        for (std::uint32_t i = 0; i < atoms.size(); ++i) m[i] = mean(i);
        return m;
    }

    double arm_mean(const Arm& a) const {
        double s = 0.0;
        for (AtomId x : a.atoms()) s += mean(x);
        return s;
    }

    // One independent posterior draw per atom (the Thompson step input).
    double sample(AtomId atom, RngStream& rng) const {
        if (const auto* b = std::get_if<BetaPosterior>(&atoms[atom]))
            return rng.beta(b->alpha, b->beta);
        const auto& dp = std::get<DiscretePosterior>(atoms[atom]);
        return dp.theta[rng.categorical(dp.weights())];
    }
};

inline double posterior_mean_arm(const PosteriorState& state, const Arm& arm) {
    return state.arm_mean(arm);
}

// argmax_A sum_{l in A} means_l over the family, ties resolved to the
// lexicographically smallest atom bitset.
inline Arm best_arm(const std::vector<double>& means, const ArmFamily& family) {
    switch (family.kind) {
        case FamilyKind::DagPaths:
            return best_path(family.graph, means).arm;
        case FamilyKind::Explicit: {
            bool first = true;
            Arm best;
            double best_v = 0.0;
            for (const auto& a : family.arms) {
                double v = 0.0;
                for (AtomId x : a.atoms()) v += means[x];
                if (first || v > best_v || (v == best_v && lex_less(a, best))) {
                    best = a;
                    best_v = v;
                    first = false;
                }
            }
            if (first) fail(ErrorKind::EmptyFamily, "best_arm over empty family");
            return best;
        }
        case FamilyKind::AllMSubsets: {
            // top-m atoms by (mean desc, index asc) = lexicographically
            // smallest maximizing subset
            std::vector<AtomId> idx(family.d);
            std::iota(idx.begin(), idx.end(), AtomId{0});
            std::stable_sort(idx.begin(), idx.end(),
                             [&](AtomId a, AtomId b) { return means[a] > means[b]; });
            Arm best;
            for (std::uint32_t i = 0; i < family.m; ++i) best.bits |= (1ULL << idx[i]);
            return best;
        }
    }
    fail(ErrorKind::InternalError, "unknown family kind");
}

}  // namespace semibandit
