#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "semibandit/errors.hpp"
#include "semibandit/family.hpp"
#include "semibandit/graph.hpp"
#include "semibandit/prior.hpp"

namespace semibandit {

using json = nlohmann::json;

namespace cfg {

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
    fail(ErrorKind::ConfigError, where + ": " + what);
}

// Unknown keys are rejected so typos cannot silently change a run.
inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
    if (!j.is_object()) bad(where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) bad(where, "unknown field '" + it.key() + "'");
}

inline const json& require(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) bad(where, "missing field '" + key + "'");
    return j.at(key);
}

inline double get_number(const json& j, const std::string& key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number()) bad(where + "." + key, "expected a number");
    return v.get<double>();
}

inline double get_number_or(const json& j, const std::string& key, double def) {
    return j.contains(key) ? j.at(key).get<double>() : def;
}

inline std::uint64_t get_count(const json& j, const std::string& key, const std::string& where) {
    const double v = get_number(j, key, where);
    if (v < 0 || v != std::floor(v)) bad(where + "." + key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

inline std::uint64_t get_count_or(const json& j, const std::string& key, std::uint64_t def) {
    if (!j.contains(key)) return def;
    const double v = j.at(key).get<double>();
    if (v < 0 || v != std::floor(v))
        bad(key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

inline std::string get_string(const json& j, const std::string& key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_string()) bad(where + "." + key, "expected a string");
    return v.get<std::string>();
}

}  // namespace cfg

// {"beta": [a, b]} or {"discrete": [[theta, prob], ...]}
inline PriorSpec parse_prior_spec(const json& j, const std::string& where) {
    cfg::check_keys(j, {"beta", "discrete"}, where);
    if (j.contains("beta") == j.contains("discrete"))
        cfg::bad(where, "expected exactly one of 'beta' or 'discrete'");
    if (j.contains("beta")) {
        const json& b = j.at("beta");
        if (!b.is_array() || b.size() != 2) cfg::bad(where + ".beta", "expected [alpha, beta]");
        BetaParams p{b[0].get<double>(), b[1].get<double>()};
        validate_prior_spec(p);
        return p;
    }
    const json& d = j.at("discrete");
    if (!d.is_array() || d.empty()) cfg::bad(where + ".discrete", "expected [[theta, prob], ...]");
    DiscreteSupport ds;
    for (const auto& pt : d) {
        if (!pt.is_array() || pt.size() != 2)
            cfg::bad(where + ".discrete", "each point must be [theta, prob]");
        ds.theta.push_back(pt[0].get<double>());
        ds.prob.push_back(pt[1].get<double>());
    }
    validate_prior_spec(ds);
    return ds;
}

// {"atoms": [spec, ...]} or {"repeat": spec, "count": d}
inline ProductPrior parse_prior(const json& j, std::uint32_t family_d,
                                const std::string& where = "prior") {
    cfg::check_keys(j, {"atoms", "repeat", "count"}, where);
    ProductPrior prior;
    if (j.contains("atoms")) {
        const json& a = j.at("atoms");
        if (!a.is_array() || a.empty()) cfg::bad(where + ".atoms", "expected a non-empty array");
        for (std::size_t i = 0; i < a.size(); ++i)
            prior.atoms.push_back(
                parse_prior_spec(a[i], where + ".atoms[" + std::to_string(i) + "]"));
    } else if (j.contains("repeat")) {
        const std::uint64_t count = cfg::get_count_or(j, "count", family_d);
        if (count == 0) cfg::bad(where, "repeat prior needs count > 0 (or a family d)");
        const PriorSpec spec = parse_prior_spec(j.at("repeat"), where + ".repeat");
        for (std::uint64_t i = 0; i < count; ++i) prior.atoms.push_back(spec);
    } else {
        cfg::bad(where, "expected 'atoms' or 'repeat'");
    }
    validate_prior(prior);
    return prior;
}

inline ArmFamily parse_family(const json& j, const std::string& where = "family") {
    const std::string kind = cfg::get_string(j, "kind", where);
    if (kind == "all_m_subsets") {
        cfg::check_keys(j, {"kind", "d", "m"}, where);
        return make_all_m_subsets(static_cast<std::uint32_t>(cfg::get_count(j, "d", where)),
                                  static_cast<std::uint32_t>(cfg::get_count(j, "m", where)));
    }
    if (kind == "explicit") {
        cfg::check_keys(j, {"kind", "d", "arms"}, where);
        const std::uint32_t d = static_cast<std::uint32_t>(cfg::get_count(j, "d", where));
        const json& arms = cfg::require(j, "arms", where);
        std::vector<Arm> list;
        for (const auto& a : arms) {
            Arm arm;
            for (const auto& atom : a) arm.bits |= (1ULL << atom.get<std::uint32_t>());
            list.push_back(arm);
        }
        return make_explicit_family(d, std::move(list));
    }
    if (kind == "dag_paths") {
        cfg::check_keys(j, {"kind", "d", "graph"}, where);
        const std::uint32_t d = static_cast<std::uint32_t>(cfg::get_count(j, "d", where));
        return make_dag_family(d, graph_from_json(cfg::require(j, "graph", where),
                                                  static_cast<int>(d)));
    }
    if (kind == "m_subset_graph") {
        cfg::check_keys(j, {"kind", "d", "m"}, where);
        const std::uint32_t d = static_cast<std::uint32_t>(cfg::get_count(j, "d", where));
        const std::uint32_t m = static_cast<std::uint32_t>(cfg::get_count(j, "m", where));
        return make_dag_family(d, encode_m_subsets(d, m));
    }
    cfg::bad(where + ".kind", "unknown family kind '" + kind + "'");
}

// {"size_a": 1, "size_b": 1, "support": [[muA, muB, prob], ...]}
inline TwoArmJointPrior parse_two_arm(const json& j, const std::string& where = "joint") {
    cfg::check_keys(j, {"size_a", "size_b", "support"}, where);
    TwoArmJointPrior joint;
    joint.size_a = static_cast<int>(cfg::get_count_or(j, "size_a", 1));
    joint.size_b = static_cast<int>(cfg::get_count_or(j, "size_b", 1));
    const json& s = cfg::require(j, "support", where);
    for (const auto& pt : s) {
        if (!pt.is_array() || pt.size() != 3)
            cfg::bad(where + ".support", "each point must be [mu_a, mu_b, prob]");
        joint.mu_a.push_back(pt[0].get<double>());
        joint.mu_b.push_back(pt[1].get<double>());
        joint.prob.push_back(pt[2].get<double>());
    }
    validate_two_arm(joint);
    return joint;
}

}  // namespace semibandit
