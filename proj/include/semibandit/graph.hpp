#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semibandit/arm.hpp"
#include "semibandit/errors.hpp"

namespace semibandit {

// Layered rooted DAG whose edges carry atoms; rooted paths encode arms.
// Nodes are (state, stage) pairs; transitions are deterministic: at most
// one edge per (node, atom). Edges with atom == kNoAtom carry reward 0 and
// do not contribute atoms to a path's arm (used by feasibility augmentation).
inline constexpr int kNoAtom = -1;
inline constexpr int kBadState = -2;
inline constexpr int kGoodState = -3;

struct GraphNode {
    int state = 0;
    int stage = 0;
};

struct GraphEdge {
    int from = 0;
    int to = 0;
    int atom = kNoAtom;
};

struct TransitionGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    int root = 0;
    // Reward collected on reaching a terminal node (GOOD = stages + 1).
    std::vector<double> terminal_value;
    bool augmented = false;

    int num_atoms = 0;  // d; atoms on edges lie in [0, d)

    std::size_t node_count() const { return nodes.size(); }

    int num_stages() const {
        int h = 0;
        for (const auto& n : nodes) h = std::max(h, n.stage);
        return h;
    }

    std::vector<std::vector<std::pair<int, int>>> adjacency() const {
        std::vector<std::vector<std::pair<int, int>>> adj(nodes.size());
        for (const auto& e : edges) adj[e.from].push_back({e.atom, e.to});
        for (auto& v : adj)
            std::sort(v.begin(), v.end());
        return adj;
    }

    bool is_sink(int node, const std::vector<std::vector<std::pair<int, int>>>& adj) const {
        return adj[node].empty();
    }

    double terminal(int node) const {
        return node < static_cast<int>(terminal_value.size()) ? terminal_value[node] : 0.0;
    }
};

namespace detail {

inline void enumerate_paths_rec(const std::vector<std::vector<std::pair<int, int>>>& adj,
                                int node, Arm acc, std::vector<Arm>& out, std::size_t budget) {
    if (adj[node].empty()) {
        out.push_back(acc);
        if (out.size() > budget) fail(ErrorKind::BudgetExceeded, "too many rooted paths");
        return;
    }
    for (const auto& [atom, to] : adj[node]) {
        Arm next = acc;
        if (atom >= 0) {
            if (next.contains(static_cast<AtomId>(atom)))
                fail(ErrorKind::InternalError,
                     "rooted path repeats atom " + std::to_string(atom));
            next.bits |= (1ULL << atom);
        }
        enumerate_paths_rec(adj, to, next, out, budget);
    }
}

}  // namespace detail

// All rooted path arms, in DFS order. Throws if a path repeats an atom
// (invalid encodings are rejected rather than silently accepted).
inline std::vector<Arm> enumerate_path_arms(const TransitionGraph& g,
                                            std::size_t budget = 1000000) {
    auto adj = g.adjacency();
    std::vector<Arm> out;
    detail::enumerate_paths_rec(adj, g.root, Arm{}, out, budget);
    return out;
}

// Structural validation for encoding graphs: layered edges, deterministic
// transitions and (for non-augmented graphs) the no-repeated-atom rule.
inline void validate_graph(const TransitionGraph& g, std::size_t path_budget = 1000000) {
    if (g.nodes.empty()) fail(ErrorKind::ConfigError, "graph has no nodes");
    if (g.root < 0 || g.root >= static_cast<int>(g.nodes.size()))
        fail(ErrorKind::ConfigError, "graph root out of range");
    if (g.nodes[g.root].stage != 0) fail(ErrorKind::ConfigError, "root must be at stage 0");
    std::map<std::pair<int, int>, int> seen;
    for (const auto& e : g.edges) {
        if (e.from < 0 || e.from >= static_cast<int>(g.nodes.size()) || e.to < 0 ||
            e.to >= static_cast<int>(g.nodes.size()))
            fail(ErrorKind::ConfigError, "edge endpoint out of range");
        if (g.nodes[e.to].stage != g.nodes[e.from].stage + 1)
            fail(ErrorKind::ConfigError, "edges must advance stage by one");
        if (e.atom != kNoAtom && (e.atom < 0 || e.atom >= g.num_atoms))
            fail(ErrorKind::ConfigError, "edge atom out of range");
        if (e.atom != kNoAtom && ++seen[{e.from, e.atom}] > 1)
            fail(ErrorKind::ConfigError, "duplicate (node, atom) transition");
    }
    if (!g.augmented) enumerate_path_arms(g, path_budget);  // throws on atom repeats
}

// MDP encoding of the all-m-subsets family: m stages, states are the
// largest atom already included, actions are larger atoms that still leave
// room to finish. Node count is 1 + m*(d-m+1) <= d*m + 2.
inline TransitionGraph encode_m_subsets(std::uint32_t d, std::uint32_t m) {
    if (d == 0 || d > kMaxAtoms) fail(ErrorKind::BadM, "d out of range");
    if (m < 1 || m > d) fail(ErrorKind::BadM, "m must lie in [1, d]");
    TransitionGraph g;
    g.num_atoms = static_cast<int>(d);
    g.nodes.push_back({-1, 0});
    g.root = 0;
    // node for (largest atom = s, stage = i); valid s in [i-1, d-m+i-1]
    std::map<std::pair<int, int>, int> index;
    auto node_id = [&](int stage, int state) {
        auto it = index.find({stage, state});
        if (it != index.end()) return it->second;
        g.nodes.push_back({state, stage});
        int id = static_cast<int>(g.nodes.size()) - 1;
        index[{stage, state}] = id;
        return id;
    };
    const int di = static_cast<int>(d), mi = static_cast<int>(m);
    for (int i = 0; i < mi; ++i) {
        // lowest/highest admissible "largest atom" after i picks
        const int lo = i - 1, hi = di - mi + i - 1;
        for (int s = std::max(lo, -1); s <= hi; ++s) {
            if (i == 0 && s != -1) continue;
            const int from = (i == 0) ? g.root : node_id(i, s);
            for (int a = s + 1; a <= di - mi + i; ++a)
                g.edges.push_back({from, node_id(i + 1, a), a});
        }
    }
    g.terminal_value.assign(g.nodes.size(), 0.0);
    return g;
}

// Trie-like layered encoding of an explicit arm list over the ascending
// atom order, merging nodes with identical completion sets at equal depth.
// Rejects (soundly, not as a proof of non-encodability) when the node
// bound d^2 + 2 is exceeded.
inline TransitionGraph encode_explicit(const std::vector<Arm>& arms, std::uint32_t d) {
    if (arms.empty()) fail(ErrorKind::EmptyFamily, "no arms to encode");
    TransitionGraph g;
    g.num_atoms = static_cast<int>(d);
    using Suffixes = std::vector<std::vector<AtomId>>;
    std::map<std::pair<int, Suffixes>, int> memo;
    std::vector<int> per_stage_count;

    Suffixes all;
    for (const auto& a : arms) all.push_back(a.atoms());
    std::sort(all.begin(), all.end());

    const std::size_t node_cap = static_cast<std::size_t>(d) * d + 2;

    // recursive build; returns node id for (depth, suffix set)
    auto build = [&](auto&& self, int depth, const Suffixes& suffixes) -> int {
        auto key = std::make_pair(depth, suffixes);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        if (static_cast<int>(per_stage_count.size()) <= depth) per_stage_count.resize(depth + 1, 0);
        const int state = per_stage_count[depth]++;
        g.nodes.push_back({state, depth});
        const int id = static_cast<int>(g.nodes.size()) - 1;
        memo[key] = id;
        if (g.nodes.size() > node_cap)
            fail(ErrorKind::NotEncodable,
                 "node bound exceeded (bound-exceeded, not a proof of non-encodability)");
        std::map<AtomId, Suffixes> by_first;
        for (const auto& s : suffixes) {
            if (s.empty()) continue;  // antichain families cannot end early
            by_first[s.front()].push_back(std::vector<AtomId>(s.begin() + 1, s.end()));
        }
        for (auto& [atom, tails] : by_first) {
            std::sort(tails.begin(), tails.end());
            const int child = self(self, depth + 1, tails);
            g.edges.push_back({id, child, static_cast<int>(atom)});
        }
        return id;
    };
    g.root = build(build, 0, all);
    g.terminal_value.assign(g.nodes.size(), 0.0);
    return g;
}

// GOOD/BAD feasibility augmentation: every (node, atom) pair becomes an
// action; infeasible ones route to BAD (terminal reward 0) while finished
// feasible trajectories route to GOOD (terminal reward H + 1, which exceeds
// any atom-reward sum <= H, so a best-responding agent never selects an
// infeasible action). BAD is added only when some action is infeasible.
// Augmented graphs relax the layered-edge rule: edges jump to terminals.
inline TransitionGraph augment_feasibility(const TransitionGraph& base) {
    TransitionGraph g = base;
    g.augmented = true;
    const int stages = g.num_stages();
    const int final_stage = stages + 1;
    auto adj = base.adjacency();

    g.terminal_value.assign(g.nodes.size(), 0.0);
    g.nodes.push_back({kGoodState, final_stage});
    const int good = static_cast<int>(g.nodes.size()) - 1;
    g.terminal_value.push_back(static_cast<double>(stages) + 1.0);

    int bad = -1;
    auto bad_node = [&]() {
        if (bad < 0) {
            g.nodes.push_back({kBadState, final_stage});
            g.terminal_value.push_back(0.0);
            bad = static_cast<int>(g.nodes.size()) - 1;
        }
        return bad;
    };

    for (int u = 0; u < static_cast<int>(base.nodes.size()); ++u) {
        if (adj[u].empty()) {
            g.edges.push_back({u, good, kNoAtom});
            continue;
        }
        std::uint64_t feasible = 0;
        for (const auto& [atom, to] : adj[u])
            if (atom >= 0) feasible |= (1ULL << atom);
        for (int a = 0; a < g.num_atoms; ++a) {
            if ((feasible >> a) & 1ULL) continue;
            g.edges.push_back({u, bad_node(), a});
        }
    }
    return g;
}

// Rooted path count, optionally restricted to paths ending at sinks with a
// given state label (e.g. kGoodState on augmented graphs).
inline std::uint64_t count_rooted_paths(const TransitionGraph& g,
                                        std::optional<int> end_state = std::nullopt) {
    auto adj = g.adjacency();
    std::vector<int> order(g.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return g.nodes[a].stage > g.nodes[b].stage; });
    std::vector<std::uint64_t> cnt(g.nodes.size(), 0);
    for (int u : order) {
        if (adj[u].empty()) {
            cnt[u] = (!end_state || g.nodes[u].state == *end_state) ? 1 : 0;
            continue;
        }
        for (const auto& [atom, to] : adj[u]) cnt[u] += cnt[to];
    }
    return cnt[g.root];
}

// Best rooted path under per-atom weights: dynamic program in reverse
// stage order; value ties resolved toward the lexicographically smallest
// suffix arm (prefix bits cancel, so local comparison is global).
struct BestPath {
    double value = 0.0;
    Arm arm;
};

inline BestPath best_path(const TransitionGraph& g, const std::vector<double>& atom_weight) {
    auto adj = g.adjacency();
    std::vector<int> order(g.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return g.nodes[a].stage > g.nodes[b].stage; });
    std::vector<double> value(g.nodes.size(), 0.0);
    std::vector<Arm> suffix(g.nodes.size());
    for (int u : order) {
        if (adj[u].empty()) {
            value[u] = g.terminal(u);
            continue;
        }
        bool first = true;
        for (const auto& [atom, to] : adj[u]) {
            const double w = atom >= 0 ? atom_weight[static_cast<std::size_t>(atom)] : 0.0;
            const double cand = w + value[to];
            Arm cand_arm = suffix[to];
            if (atom >= 0) cand_arm.bits |= (1ULL << atom);
            if (first || cand > value[u] ||
                (cand == value[u] && lex_less(cand_arm, suffix[u]))) {
                value[u] = cand;
                suffix[u] = cand_arm;
            }
            first = false;
        }
    }
    return {value[g.root], suffix[g.root]};
}

inline nlohmann::json graph_to_json(const TransitionGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : g.nodes) nodes.push_back({{"state", n.state}, {"stage", n.stage}});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges)
        edges.push_back({{"from", e.from}, {"to", e.to}, {"atom", e.atom}});
    return {{"nodes", nodes}, {"root", g.root}, {"edges", edges}};
}

inline TransitionGraph graph_from_json(const nlohmann::json& j, int num_atoms) {
    TransitionGraph g;
    g.num_atoms = num_atoms;
    for (const auto& n : j.at("nodes"))
        g.nodes.push_back({n.at("state").get<int>(), n.at("stage").get<int>()});
    g.root = j.at("root").get<int>();
    for (const auto& e : j.at("edges"))
        g.edges.push_back(
            {e.at("from").get<int>(), e.at("to").get<int>(), e.at("atom").get<int>()});
    g.terminal_value.assign(g.nodes.size(), 0.0);
    validate_graph(g);
    return g;
}

}  // namespace semibandit
