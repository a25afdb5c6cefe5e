#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semibandit/arm.hpp"
#include "semibandit/errors.hpp"
#include "semibandit/graph.hpp"

namespace semibandit {

enum class FamilyKind { Explicit, AllMSubsets, DagPaths };

inline std::uint64_t binomial_coefficient(std::uint32_t n, std::uint32_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 c = 1;
    for (std::uint32_t i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;
        if (c > UINT64_MAX) return UINT64_MAX;  // saturate; only budget checks care
    }
    return static_cast<std::uint64_t>(c);
}

// The known, fixed set of feasible arms. AllMSubsets stays implicit (its
// arms are materialized only on demand, under a budget); the other kinds
// hold their arm lists directly.
struct ArmFamily {
    FamilyKind kind = FamilyKind::Explicit;
    std::uint32_t d = 0;
    std::uint32_t m = 0;          // AllMSubsets only
    std::vector<Arm> arms;        // Explicit and DagPaths
    TransitionGraph graph;        // DagPaths only

    std::uint64_t size() const {
        return kind == FamilyKind::AllMSubsets ? binomial_coefficient(d, m) : arms.size();
    }

    std::vector<Arm> enumerate(std::size_t budget = 1000000) const {
        if (kind != FamilyKind::AllMSubsets) return arms;
        if (size() > budget) fail(ErrorKind::BudgetExceeded, "family too large to enumerate");
        std::vector<Arm> out;
        out.reserve(size());
        // ascending combinations in lexicographic order
        std::vector<AtomId> idx(m);
        for (std::uint32_t i = 0; i < m; ++i) idx[i] = i;
        for (;;) {
            out.push_back(Arm::from_atoms(idx));
            int i = static_cast<int>(m) - 1;
            while (i >= 0 && idx[static_cast<std::size_t>(i)] ==
                                 d - m + static_cast<std::uint32_t>(i))
                --i;
            if (i < 0) break;
            ++idx[static_cast<std::size_t>(i)];
            for (std::uint32_t j = static_cast<std::uint32_t>(i) + 1; j < m; ++j)
                idx[j] = idx[j - 1] + 1;
        }
        return out;
    }

    bool contains(const Arm& a) const {
        if (kind == FamilyKind::AllMSubsets)
            return a.size() == static_cast<int>(m) && (a.bits >> d) == 0;
        for (const auto& b : arms)
            if (b == a) return true;
        return false;
    }

    // Remap atom indices (new_atom = perm[old_atom]); used by problem
    // canonicalization when atoms are re-sorted by prior mean.
    ArmFamily permuted(const std::vector<AtomId>& perm) const {
        ArmFamily out = *this;
        auto remap = [&](const Arm& a) {
            Arm r;
            for (AtomId x : a.atoms()) r.bits |= (1ULL << perm[x]);
            return r;
        };
        for (auto& a : out.arms) a = remap(a);
        for (auto& e : out.graph.edges)
            if (e.atom >= 0) e.atom = static_cast<int>(perm[static_cast<AtomId>(e.atom)]);
        return out;
    }
};

namespace detail {

inline void check_antichain(const std::vector<Arm>& arms) {
    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (arms[i].empty()) fail(ErrorKind::EmptyFamily, "empty arm");
        for (std::size_t j = 0; j < arms.size(); ++j) {
            if (i == j) continue;
            if (arms[i] == arms[j])
                fail(ErrorKind::ContainedArm, "duplicate arm " + arms[i].to_string());
            if (arms[i].subset_of(arms[j]))
                fail(ErrorKind::ContainedArm,
                     arms[i].to_string() + " contained in " + arms[j].to_string());
        }
    }
}

}  // namespace detail

inline ArmFamily make_explicit_family(std::uint32_t d, std::vector<Arm> arms) {
    if (d == 0 || d > kMaxAtoms) fail(ErrorKind::BadM, "d out of range");
    if (arms.empty()) fail(ErrorKind::EmptyFamily, "no arms");
    for (const auto& a : arms)
        if ((a.bits >> d) != 0) fail(ErrorKind::BadM, "arm uses atom >= d");
    detail::check_antichain(arms);
    ArmFamily f;
    f.kind = FamilyKind::Explicit;
    f.d = d;
    f.arms = std::move(arms);
    return f;
}

inline ArmFamily make_all_m_subsets(std::uint32_t d, std::uint32_t m) {
    if (d == 0 || d > kMaxAtoms) fail(ErrorKind::BadM, "d out of range");
    if (m < 1 || m > d) fail(ErrorKind::BadM, "m must lie in [1, d]");
    ArmFamily f;
    f.kind = FamilyKind::AllMSubsets;
    f.d = d;
    f.m = m;
    return f;
}

inline ArmFamily make_dag_family(std::uint32_t d, TransitionGraph graph,
                                 std::size_t budget = 1000000) {
    if (d == 0 || d > kMaxAtoms) fail(ErrorKind::BadM, "d out of range");
    graph.num_atoms = static_cast<int>(d);
    validate_graph(graph, budget);
    ArmFamily f;
    f.kind = FamilyKind::DagPaths;
    f.d = d;
    f.graph = std::move(graph);
    auto paths = enumerate_path_arms(f.graph, budget);
    // distinct arms only (several paths may encode the same arm set)
    std::sort(paths.begin(), paths.end(), lex_less);
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    detail::check_antichain(paths);
    f.arms = std::move(paths);
    return f;
}

}  // namespace semibandit
