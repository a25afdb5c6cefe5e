#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "semibandit/errors.hpp"
#include "semibandit/family.hpp"
#include "semibandit/graph.hpp"
#include "semibandit/posterior.hpp"
#include "semibandit/prior.hpp"
#include "semibandit/rng.hpp"
#include "semibandit/special.hpp"
#include "semibandit/thompson.hpp"

namespace semibandit {

struct HhConstants {
    double r_alt = 0.0;    // min over feasible actions of the prior mean (exact)
    double eps_pun = 0.0;  // r_alt / (18 H)
    double q_pun = 0.0;    // Pr[theta_l <= eps_pun for all atoms] (exact product)
    std::uint64_t n_lrn = 0;
    std::uint64_t n_ph = 0;
    double n0 = 0.0;        // scheduling variant, with the q_pun^-1 factor
    double n0_paper = 0.0;  // the theorem's printed form, with q_pun as a factor
    double delta = 0.0;
    double c1 = 1.0;
    double c2 = 1.0;
    int S = 0;  // distinct non-root states of the encoding graph
    int A = 0;  // actions = atoms
    int H = 0;  // stages
};

// Prior-dependent Hidden Hallucination constants for an encoding graph.
// n_lrn = ceil(c1 r_alt^-2 H^4 (S + log(SAH / (delta r_alt q_pun)))).
// The theorem prints N0 = c2 n q_pun r_alt^-3 S A H^4; since N0 must grow
// as q_pun shrinks, the q_pun^-1 variant is used for scheduling and both
// are reported.
inline HhConstants estimate_hh_constants(const ProductPrior& prior, const TransitionGraph& graph,
                                         double delta, double c1, double c2,
                                         std::uint64_t n_ph_override = 0) {
    validate_prior(prior);
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::ConfigError, "delta must be in (0,1)");
    HhConstants k;
    k.delta = delta;
    k.c1 = c1;
    k.c2 = c2;
    k.H = graph.num_stages();
    k.A = static_cast<int>(prior.d());
    std::set<int> states;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i)
        if (static_cast<int>(i) != graph.root && graph.nodes[i].state >= 0)
            states.insert(graph.nodes[i].state);
    k.S = static_cast<int>(states.size());

    std::uint64_t edge_atoms = 0;
    for (const auto& e : graph.edges)
        if (e.atom >= 0) edge_atoms |= (1ULL << e.atom);
    k.r_alt = INFINITY;
    for (AtomId x = 0; x < prior.d(); ++x)
        if ((edge_atoms >> x) & 1ULL) k.r_alt = std::min(k.r_alt, prior.mean(x));
    if (!(k.r_alt > 0.0)) fail(ErrorKind::ConfigError, "r_alt must be positive");

    k.eps_pun = k.r_alt / (18.0 * k.H);
    k.q_pun = 1.0;
    for (AtomId x = 0; x < prior.d(); ++x) k.q_pun *= prior_cdf(prior.atoms[x], k.eps_pun);
    if (k.q_pun < 1e-300)
        fail(ErrorKind::ZeroQpun, "punish event has (numerically) zero prior probability");

    const double S = k.S, A = k.A, H = k.H;
    k.n_lrn = static_cast<std::uint64_t>(std::ceil(
        c1 / (k.r_alt * k.r_alt) * std::pow(H, 4.0) *
        (S + std::log(S * A * H / (delta * k.r_alt * k.q_pun)))));
    k.n0_paper = c2 * static_cast<double>(k.n_lrn) * k.q_pun / std::pow(k.r_alt, 3.0) * S * A *
                 std::pow(H, 4.0);
    k.n0 = c2 * static_cast<double>(k.n_lrn) / k.q_pun / std::pow(k.r_alt, 3.0) * S * A *
           std::pow(H, 4.0);
    k.n_ph = n_ph_override > 0
                 ? n_ph_override
                 : std::min<std::uint64_t>(
                       static_cast<std::uint64_t>(std::ceil(2.0 / k.q_pun)), 1000000);
    return k;
}

enum class LedgerKind { Raw, Censored, Honest, Hallucinated };

// One revealed (action, per-atom rewards) tuple. Bit l of revealed_mask
// says atom l's reward is present; censored atoms have their bit clear.
struct LedgerEntry {
    Arm arm;
    std::uint64_t reward_bits = 0;
    std::uint64_t revealed_mask = 0;
};

struct Ledger {
    LedgerKind kind = LedgerKind::Raw;
    std::vector<LedgerEntry> entries;
};

// Bayesian agent: posterior after observing the ledger's revealed rewards.
inline PosteriorState posterior_from_ledger(const ProductPrior& prior, const Ledger& ledger) {
    PosteriorState post = PosteriorState::from_prior(prior);
    for (const auto& e : ledger.entries) {
        std::uint64_t seen = e.arm.bits & e.revealed_mask;
        while (seen) {
            const AtomId x = static_cast<AtomId>(std::countr_zero(seen));
            seen &= seen - 1;
            post.update(x, (e.reward_bits >> x) & 1ULL);
        }
    }
    return post;
}

// Best response of a rational agent: posterior-argmax policy over the
// feasibility-augmented graph (GOOD/BAD dominance keeps it feasible).
inline Arm agent_best_response(const ProductPrior& prior, const TransitionGraph& augmented,
                               const Ledger& ledger) {
    const PosteriorState post = posterior_from_ledger(prior, ledger);
    return best_path(augmented, post.means()).arm;
}

// Punish-event draw: theta from the prior conditioned on
// {theta_l <= eps_pun for every fully-explored atom l}. Beta atoms use the
// exact truncated sampler (identical in law to rejection); discrete atoms
// renormalize the support below the cutoff.
inline Instance sample_hallucinated_theta(const ProductPrior& prior, std::uint64_t fully_mask,
                                          double eps_pun, RngStream& rng) {
    Instance inst;
    inst.theta.resize(prior.d());
    for (AtomId x = 0; x < prior.d(); ++x) {
        if (!((fully_mask >> x) & 1ULL)) {
            inst.theta[x] = sample_theta(prior.atoms[x], rng);
            continue;
        }
        if (const auto* b = std::get_if<BetaParams>(&prior.atoms[x])) {
            inst.theta[x] = truncated_beta(b->alpha, b->beta, eps_pun, rng);
            continue;
        }
        const auto& ds = std::get<DiscreteSupport>(prior.atoms[x]);
        std::vector<double> w(ds.prob.size(), 0.0);
        double mass = 0.0;
        for (std::size_t i = 0; i < ds.theta.size(); ++i)
            if (ds.theta[i] <= eps_pun) mass += (w[i] = ds.prob[i]);
        if (mass <= 0.0)
            fail(ErrorKind::RejectionBudgetExceeded,
                 "punish event has zero mass for a fully-explored atom");
        for (auto& v : w) v /= mass;
        inst.theta[x] = ds.theta[rng.categorical(w)];
    }
    return inst;
}

// Hallucinate subroutine: censor under-explored atoms, re-draw rewards of
// fully-explored atoms under the punish event.
inline Ledger hallucinate(const ProductPrior& prior, const Ledger& honest,
                          std::uint64_t fully_mask, double eps_pun, RngStream& rng) {
    const Instance theta_hal = sample_hallucinated_theta(prior, fully_mask, eps_pun, rng);
    Ledger out;
    out.kind = LedgerKind::Hallucinated;
    out.entries.reserve(honest.entries.size());
    for (const auto& e : honest.entries) {
        LedgerEntry h;
        h.arm = e.arm;
        h.revealed_mask = e.arm.bits & fully_mask;
        std::uint64_t mask = h.revealed_mask;
        while (mask) {
            const AtomId x = static_cast<AtomId>(std::countr_zero(mask));
            mask &= mask - 1;
            if (rng.bernoulli(theta_hal.theta[x])) h.reward_bits |= (1ULL << x);
        }
        out.entries.push_back(h);
    }
    return out;
}

struct HhPhaseRecord {
    std::uint64_t phase = 0;     // 1-based
    Arm honest_arm;              // played in all non-hallucination rounds
    Arm hal_arm;                 // played in the hallucination round
    std::uint64_t hal_offset = 0;  // 0-based position of k_l within the phase
    std::uint64_t hal_reward_bits = 0;
    std::uint64_t fully_mask = 0;
};

struct HhRun {
    std::vector<HhPhaseRecord> phases;
    bool covered = false;
    std::uint64_t first_coverage_round = 0;  // 1-based; 0 when not covered
    std::uint64_t rounds_simulated = 0;
    std::uint64_t covered_mask = 0;
};

// Hidden Hallucination, simulated phase-by-phase (all non-hallucination
// rounds of a phase share one best response, so phases are the unit of
// work). Rewards of non-hallucination rounds never enter any ledger and
// are materialized lazily by callers that need full histories.
inline HhRun hidden_hallucination(const ProductPrior& prior, const TransitionGraph& base_graph,
                                  const HhConstants& k, const Instance& inst,
                                  std::uint64_t max_rounds, RngStream& rng) {
    const std::uint32_t d = prior.d();
    const std::uint64_t all = d == 64 ? ~0ULL : ((1ULL << d) - 1);
    const TransitionGraph aug = augment_feasibility(base_graph);

    HhRun run;
    std::vector<std::uint64_t> hal_appearances(d, 0);
    Ledger honest;
    honest.kind = LedgerKind::Honest;
    std::vector<std::pair<Arm, std::uint64_t>> raw_hal;  // (action, true rewards)

    for (std::uint64_t phase = 1; (phase - 1) * k.n_ph < max_rounds; ++phase) {
        std::uint64_t fully = 0;
        for (AtomId x = 0; x < d; ++x)
            if (hal_appearances[x] >= k.n_lrn) fully |= (1ULL << x);

        honest.entries.clear();
        for (const auto& [arm, bits] : raw_hal)
            honest.entries.push_back({arm, bits & fully, arm.bits & fully});

        const Arm honest_arm = agent_best_response(prior, aug, honest);
        const Ledger hal_ledger = hallucinate(prior, honest, fully, k.eps_pun, rng);
        const Arm hal_arm = agent_best_response(prior, aug, hal_ledger);

        const std::uint64_t offset = rng.uniform_int(k.n_ph);
        const std::uint64_t hal_bits = pull(inst, hal_arm, rng);
        raw_hal.push_back({hal_arm, hal_bits});
        for (AtomId x : hal_arm.atoms()) ++hal_appearances[x];

        run.phases.push_back({phase, honest_arm, hal_arm, offset, hal_bits, fully});

        // exact first-coverage accounting inside the phase
        const std::uint64_t start = (phase - 1) * k.n_ph;  // 0-based round index
        auto note_cover = [&](std::uint64_t mask_add, std::uint64_t round0) {
            if (run.covered) return;
            run.covered_mask |= mask_add;
            if (run.covered_mask == all && round0 < max_rounds) {
                run.covered = true;
                run.first_coverage_round = round0 + 1;
            }
        };
        if (k.n_ph == 1) {
            note_cover(hal_arm.bits, start);
        } else if (offset == 0) {
            note_cover(hal_arm.bits, start);
            note_cover(honest_arm.bits, start + 1);
        } else {
            note_cover(honest_arm.bits, start);
            note_cover(hal_arm.bits, start + offset);
        }
        run.rounds_simulated = phase * k.n_ph;
        if (run.covered) break;
        if (run.rounds_simulated >= max_rounds) break;
    }
    run.rounds_simulated = std::min(run.rounds_simulated, max_rounds);
    return run;
}

// Materialize the per-round log of an HH run (only sensible at small
// n_ph); rewards of non-hallucination rounds are drawn here.
inline AlgoRun materialize_hh_rounds(const ProductPrior& prior, const ArmFamily& family,
                                     const HhRun& run, const HhConstants& k,
                                     const Instance& inst, std::uint64_t max_rounds,
                                     RngStream& rng, std::size_t budget = 1000000) {
    if (run.rounds_simulated > budget)
        fail(ErrorKind::BudgetExceeded, "HH round log too large; lower n_ph or max_rounds");
    AlgoRun out;
    out.history = History(prior.d());
    const Arm star = argmax_arm(inst.theta, family);
    const double mu_star = inst.arm_mean(star);
    std::uint64_t round = 0;
    for (const auto& ph : run.phases) {
        for (std::uint64_t off = 0; off < k.n_ph && round < max_rounds; ++off) {
            const bool hal = off == ph.hal_offset;
            const Arm a = hal ? ph.hal_arm : ph.honest_arm;
            const std::uint64_t bits = hal ? ph.hal_reward_bits : pull(inst, a, rng);
            ++round;
            out.history.record(static_cast<std::uint32_t>(round), a, bits,
                               static_cast<int>(ph.phase), hal);
            out.arms.push_back(a);
            out.round_gap.push_back(mu_star - inst.arm_mean(a));
        }
    }
    return out;
}

// The composed initial-exploration bootstrap: repeat HH n_repeats times
// (N0 rounds each), then play the prior-best arm for d * n_repeats filler
// rounds; T0 = N0 * n_repeats + d * n_repeats is declared up-front.
class HhBootstrap final : public Bootstrap {
  public:
    HhBootstrap(TransitionGraph base_graph, HhConstants constants, std::uint64_t n_repeats)
        : graph_(std::move(base_graph)), k_(constants), n_repeats_(n_repeats) {
        if (n_repeats < 1) fail(ErrorKind::ConfigError, "n_repeats must be >= 1");
        if (!(k_.n0 < 4e18)) fail(ErrorKind::BudgetExceeded, "N0 too large to schedule");
        n0_rounds_ = static_cast<std::uint64_t>(k_.n0);
    }

    std::uint64_t t0() const {
        return n0_rounds_ * n_repeats_ + static_cast<std::uint64_t>(graph_.num_atoms) * n_repeats_;
    }

    std::uint32_t declared_t0() const override {
        const std::uint64_t v = t0();
        if (v > UINT32_MAX)
            fail(ErrorKind::BudgetExceeded, "declared T0 exceeds the simulable horizon");
        return static_cast<std::uint32_t>(v);
    }

    std::uint64_t guaranteed_samples_per_atom() const override { return n_repeats_; }

    void run(const ProductPrior& prior, const ArmFamily& family, const Instance& inst,
             AlgoRun& out, RngStream& rng) const override {
        for (std::uint64_t rep = 0; rep < n_repeats_; ++rep) {
            const HhRun hh = hidden_hallucination(prior, graph_, k_, inst, n0_rounds_, rng);
            AlgoRun rounds =
                materialize_hh_rounds(prior, family, hh, k_, inst, n0_rounds_, rng);
            const std::uint32_t base =
                static_cast<std::uint32_t>(out.history.log.size());
            for (const auto& e : rounds.history.log)
                out.history.record(base + e.round, e.arm, e.reward_bits, e.phase, e.exploration);
        }
        // filler rounds on the prior-best arm
        std::vector<double> mu0(prior.d());
        for (AtomId x = 0; x < prior.d(); ++x) mu0[x] = prior.mean(x);
        const Arm filler = best_arm(mu0, family);
        const std::uint64_t fill = static_cast<std::uint64_t>(graph_.num_atoms) * n_repeats_;
        std::uint32_t round = static_cast<std::uint32_t>(out.history.log.size());
        for (std::uint64_t t = 0; t < fill; ++t)
            out.history.record(++round, filler, pull(inst, filler, rng), -1, false);
    }

  private:
    TransitionGraph graph_;
    HhConstants k_;
    std::uint64_t n_repeats_ = 1;
    std::uint64_t n0_rounds_ = 0;
};

}  // namespace semibandit
