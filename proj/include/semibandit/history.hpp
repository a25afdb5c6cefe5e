#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semibandit/arm.hpp"
#include "semibandit/prior.hpp"
#include "semibandit/rng.hpp"

namespace semibandit {

struct AtomCounts {
    std::uint64_t successes = 0;
    std::uint64_t failures = 0;

    std::uint64_t total() const { return successes + failures; }
};

// One round of semi-bandit feedback: rewards are recorded per atom of the
// chosen arm (bit l of reward_bits is atom l's Bernoulli outcome; bits
// outside the arm are zero and meaningless).
struct RoundEntry {
    std::uint32_t round = 0;
    Arm arm;
    std::uint64_t reward_bits = 0;
    int phase = 0;
    bool exploration = false;

    double reward_sum() const { return static_cast<double>(std::popcount(reward_bits)); }
};

struct History {
    std::vector<AtomCounts> counts;
    std::vector<RoundEntry> log;

    explicit History(std::uint32_t d = 0) : counts(d) {}

    void record(std::uint32_t round, const Arm& arm, std::uint64_t reward_bits, int phase = 0,
                bool exploration = false) {
        log.push_back({round, arm, reward_bits & arm.bits, phase, exploration});
        for (AtomId x : arm.atoms()) {
            if ((reward_bits >> x) & 1ULL)
                ++counts[x].successes;
            else
                ++counts[x].failures;
        }
    }

    // Counts recomputed from the log; equals `counts` by construction.
    std::vector<AtomCounts> aggregate_log() const {
        std::vector<AtomCounts> agg(counts.size());
        for (const auto& e : log) {
            for (AtomId x : e.arm.atoms()) {
                if ((e.reward_bits >> x) & 1ULL)
                    ++agg[x].successes;
                else
                    ++agg[x].failures;
            }
        }
        return agg;
    }

    std::uint64_t min_atom_samples() const {
        std::uint64_t lo = UINT64_MAX;
        for (const auto& c : counts) lo = std::min(lo, c.total());
        return counts.empty() ? 0 : lo;
    }
};

// Semi-bandit pull: each atom of the arm yields an independent
// Bernoulli(theta_l) reward.
inline std::uint64_t pull(const Instance& instance, const Arm& arm, RngStream& rng) {
    std::uint64_t bits = 0;
    for (AtomId x : arm.atoms())
        if (rng.bernoulli(instance.theta[x])) bits |= (1ULL << x);
    return bits;
}

}  // namespace semibandit
