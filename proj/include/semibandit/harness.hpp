#pragma once

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semibandit/bic.hpp"
#include "semibandit/config.hpp"
#include "semibandit/hallucination.hpp"
#include "semibandit/parallel.hpp"
#include "semibandit/sequence.hpp"
#include "semibandit/sha256.hpp"
#include "semibandit/stats.hpp"
#include "semibandit/thompson.hpp"
#include "semibandit/version.hpp"

namespace semibandit::harness {

// Reserved stream ids; replicate k uses stream k.
inline constexpr std::uint64_t kConstantsStream = 0xC0575A17ULL;
inline constexpr std::uint64_t kInstanceStreamBase = 0;

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t resolve_seed(const json& config) {
    if (const char* env = std::getenv("SEMIBANDIT_SEED")) return std::strtoull(env, nullptr, 10);
    return cfg::get_count_or(config, "seed", 0);
}

// ---------------------------------------------------------------------------
// Artifact writing: files are built in memory, hashed, then written, so the
// manifest can list every artifact with its digest.
// ---------------------------------------------------------------------------

class ArtifactWriter {
  public:
    explicit ArtifactWriter(std::string outdir) : outdir_(std::move(outdir)) {
        std::filesystem::create_directories(outdir_);
    }

    void write(const std::string& name, const std::string& content) {
        const std::string path = outdir_ + "/" + name;
        std::ofstream f(path, std::ios::binary);
        if (!f) fail(ErrorKind::ConfigError, "cannot write " + path);
        f << content;
        files_.push_back({name, Sha256::hex_of(content)});
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    // every emitted file with its hash; written last, not self-listed
    void finish_manifest(const json& config, std::uint64_t seed, std::uint64_t replicates,
                         double wall_sec) {
        json files = json::array();
        for (const auto& [name, hash] : files_) files.push_back({{"file", name}, {"sha256", hash}});
        json manifest = {
            {"version", kVersion},
            {"config_sha256", Sha256::hex_of(config.dump())},
            {"seed", seed},
            {"replicate_streams", {{"base", kInstanceStreamBase}, {"count", replicates}}},
            {"artifacts", files},
            {"wall_clock_sec", wall_sec},
        };
        const std::string path = outdir_ + "/manifest.json";
        std::ofstream f(path, std::ios::binary);
        f << manifest.dump(2) << "\n";
    }

    const std::string& outdir() const { return outdir_; }

  private:
    std::string outdir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

// ---------------------------------------------------------------------------
// Algorithm factory.
// ---------------------------------------------------------------------------

struct BuiltAlgorithm {
    std::function<AlgoRun(const Instance&, std::uint32_t, RngStream&)> run;
    bool two_arm = false;
    TwoArmJointPrior joint;
    // schedule-bound algorithms fix their own round count (horizon ignored)
    std::optional<std::uint32_t> fixed_rounds;
    json meta = json::object();
};

inline TransitionGraph encoding_graph_for(const ArmFamily& family) {
    switch (family.kind) {
        case FamilyKind::DagPaths: return family.graph;
        case FamilyKind::AllMSubsets: return encode_m_subsets(family.d, family.m);
        case FamilyKind::Explicit: return encode_explicit(family.arms, family.d);
    }
    fail(ErrorKind::InternalError, "unknown family kind");
}

inline PropertyPReport property_p_report(const ProductPrior& prior, const ArmFamily& family,
                                         const std::string& variant) {
    if (variant == "fixed") return constants_fixed_size(prior, family);
    if (variant == "general") return constants_general(prior, family);
    cfg::bad("variant", "expected 'fixed' or 'general'");
}

inline HiddenExplorationPlan hidden_exploration_plan_from_config(const json& a,
                                                                 const ProductPrior& prior,
                                                                 const ArmFamily& family,
                                                                 const std::string& where,
                                                                 json& meta) {
    const std::string variant =
        a.contains("variant") ? a.at("variant").get<std::string>() : std::string("fixed");
    PropertyPReport rep = property_p_report(prior, family, variant);
    meta["property_p"] = {{"n_p", rep.n_p},       {"tau_p", rep.tau_p},
                          {"rho_p", rep.rho_p},   {"log_rho_p", rep.log_rho_p},
                          {"kappa", rep.kappa},   {"L", rep.L},
                          {"T0", rep.T0},         {"degenerate", rep.degenerate}};
    const std::uint64_t N = cfg::get_count_or(a, "N", rep.n_p);
    HiddenExplorationPlan plan = hidden_exploration_plan(rep, N);
    if (a.contains("L")) {
        // explicit override, e.g. to study sub-threshold stretch factors
        plan.L = cfg::get_count(a, "L", where);
        meta["L_override"] = plan.L;
    }
    meta["N"] = plan.N;
    meta["L"] = plan.L;
    meta["total_rounds"] = plan.total_rounds();
    meta["theorem_rounds"] = plan.theorem_rounds();
    return plan;
}

inline BuiltAlgorithm build_algorithm(const json& a, const ProductPrior& prior,
                                      const ArmFamily& family, std::uint64_t seed,
                                      const std::string& where = "algorithm") {
    const std::string name = cfg::get_string(a, "name", where);
    BuiltAlgorithm built;
    built.meta["name"] = name;

    if (name == "ts") {
        cfg::check_keys(a, {"name"}, where);
        built.run = [prior, family](const Instance& inst, std::uint32_t T, RngStream& rng) {
            return run_ts(prior, family, inst, T, rng);
        };
        return built;
    }
    if (name == "uniform-baseline") {
        cfg::check_keys(a, {"name"}, where);
        built.run = [prior, family](const Instance& inst, std::uint32_t T, RngStream& rng) {
            return run_uniform_baseline(prior, family, inst, T, rng);
        };
        return built;
    }
    if (name == "composite") {
        cfg::check_keys(a, {"name", "bootstrap"}, where);
        const json& b = cfg::require(a, "bootstrap", where);
        const std::string bname = cfg::get_string(b, "name", where + ".bootstrap");
        std::shared_ptr<Bootstrap> boot;
        if (bname == "exogenous") {
            cfg::check_keys(b, {"name", "n", "c_ts", "mc_samples"}, where + ".bootstrap");
            std::uint64_t n = 0;
            if (b.contains("n") && b.at("n").is_string()) {
                if (b.at("n").get<std::string>() != "auto")
                    cfg::bad(where + ".bootstrap.n", "expected a count or \"auto\"");
                RngStream crng(seed, kConstantsStream);
                const auto k = estimate_ts_constants(
                    prior, family, cfg::get_count_or(b, "mc_samples", 100000),
                    cfg::get_number_or(b, "c_ts", 1.0), crng, seed);
                n = k.n_ts;
                built.meta["ts_constants"] = {{"epsilon_ts", k.epsilon_ts},
                                              {"epsilon_ci", k.epsilon_ci},
                                              {"delta_ts", k.delta_ts},
                                              {"delta_ci", k.delta_ci},
                                              {"c_ts", k.c_ts},
                                              {"n_ts", k.n_ts}};
            } else {
                n = cfg::get_count(b, "n", where + ".bootstrap");
            }
            built.meta["exogenous_n"] = n;
            boot = std::make_shared<ExogenousBootstrap>(n);
        } else if (bname == "hidden-exploration") {
            cfg::check_keys(b, {"name", "variant", "N", "L"}, where + ".bootstrap");
            boot = std::make_shared<HiddenExplorationBootstrap>(
                hidden_exploration_plan_from_config(b, prior, family, where + ".bootstrap",
                                                    built.meta));
        } else if (bname == "hidden-hallucination") {
            cfg::check_keys(b, {"name", "delta", "c1", "c2", "n_ph", "n_repeats", "max_rounds"},
                            where + ".bootstrap");
            const TransitionGraph g = encoding_graph_for(family);
            const HhConstants k = estimate_hh_constants(
                prior, g, cfg::get_number_or(b, "delta", 0.1), cfg::get_number_or(b, "c1", 1.0),
                cfg::get_number_or(b, "c2", 1.0), cfg::get_count_or(b, "n_ph", 0));
            built.meta["hh_constants"] = {{"r_alt", k.r_alt},   {"eps_pun", k.eps_pun},
                                          {"q_pun", k.q_pun},   {"n_lrn", k.n_lrn},
                                          {"n_ph", k.n_ph},     {"N0", k.n0},
                                          {"N0_paper", k.n0_paper}};
            boot = std::make_shared<HhBootstrap>(g, k, cfg::get_count_or(b, "n_repeats", 1));
        } else {
            cfg::bad(where + ".bootstrap.name", "unknown bootstrap '" + bname + "'");
        }
        built.meta["declared_t0"] = boot->declared_t0();
        built.run = [prior, family, boot](const Instance& inst, std::uint32_t T, RngStream& rng) {
            return run_composite(*boot, prior, family, inst, T, rng);
        };
        return built;
    }
    if (name == "hidden-exploration") {
        cfg::check_keys(a, {"name", "variant", "N", "L"}, where);
        const HiddenExplorationPlan plan =
            hidden_exploration_plan_from_config(a, prior, family, where, built.meta);
        if (plan.total_rounds() > UINT32_MAX)
            fail(ErrorKind::BudgetExceeded, "hidden-exploration schedule too long");
        built.fixed_rounds = static_cast<std::uint32_t>(plan.total_rounds());
        built.run = [prior, family, plan](const Instance& inst, std::uint32_t, RngStream& rng) {
            return run_hidden_exploration(prior, family, plan, inst, rng, true);
        };
        return built;
    }
    if (name == "hidden-hallucination") {
        cfg::check_keys(a, {"name", "delta", "c1", "c2", "n_ph", "max_rounds"}, where);
        const TransitionGraph g = encoding_graph_for(family);
        const HhConstants k = estimate_hh_constants(
            prior, g, cfg::get_number_or(a, "delta", 0.1), cfg::get_number_or(a, "c1", 1.0),
            cfg::get_number_or(a, "c2", 1.0), cfg::get_count_or(a, "n_ph", 0));
        built.meta["hh_constants"] = {{"r_alt", k.r_alt},   {"eps_pun", k.eps_pun},
                                      {"q_pun", k.q_pun},   {"n_lrn", k.n_lrn},
                                      {"n_ph", k.n_ph},     {"N0", k.n0},
                                      {"N0_paper", k.n0_paper}};
        built.run = [prior, family, g, k](const Instance& inst, std::uint32_t T, RngStream& rng) {
            const HhRun hh = hidden_hallucination(prior, g, k, inst, T, rng);
            return materialize_hh_rounds(prior, family, hh, k, inst, T, rng);
        };
        return built;
    }
    cfg::bad(where + ".name", "unknown algorithm '" + name + "'");
}

// ---------------------------------------------------------------------------
// constants subcommand.
// ---------------------------------------------------------------------------

inline json ts_constants_json(const TsConstants& k) {
    return {{"epsilon_ts", k.epsilon_ts}, {"epsilon_ci", k.epsilon_ci},
            {"delta_ts", k.delta_ts},     {"delta_ci", k.delta_ci},
            {"c_ts", k.c_ts},             {"n_ts", k.n_ts},
            {"n_ts_lo", k.n_ts_lo},       {"n_ts_hi", k.n_ts_hi},
            {"mc_samples", k.mc_samples}, {"seed", k.seed}};
}

inline json property_p_json(const PropertyPReport& rep) {
    json seq = json::array();
    for (const auto& arm : rep.sequence) seq.push_back(arm.to_hex());
    json j = {{"variant", rep.variant == PropertyPVariant::FixedSize ? "fixed" : "general"},
              {"n_p", rep.n_p},
              {"tau_p", rep.tau_p},
              {"rho_p", rep.rho_p},
              {"log_rho_p", rep.log_rho_p},
              {"kappa", rep.kappa},
              {"kappa_unbounded", rep.kappa_unbounded},
              {"sequence", seq},
              {"L", rep.L},
              {"T0", rep.T0},
              {"degenerate", rep.degenerate},
              {"degenerate_reason", rep.degenerate_reason},
              {"tau_lower_confidence", rep.tau_lower_confidence},
              {"mu0_max", rep.mu0_max},
              {"mu0_min", rep.mu0_min},
              {"nu0", rep.nu0},
              {"nu_np", rep.nu_np}};
    return j;
}

inline json hh_constants_json(const HhConstants& k) {
    return {{"r_alt", k.r_alt}, {"eps_pun", k.eps_pun}, {"q_pun", k.q_pun},
            {"n_lrn", k.n_lrn}, {"n_ph", k.n_ph},       {"N0", k.n0},
            {"N0_paper", k.n0_paper},
            {"N0_note",
             "the theorem prints N0 with q_pun as a factor; the q_pun^-1 variant is used for "
             "scheduling since N0 must grow as q_pun shrinks"},
            {"delta", k.delta}, {"c1", k.c1},           {"c2", k.c2},
            {"S", k.S},         {"A", k.A},             {"H", k.H}};
}

inline json atoms_legend(const Problem& problem) {
    json atoms = json::array();
    for (std::uint32_t i = 0; i < problem.prior.d(); ++i) {
        json a = {{"internal_index", i},
                  {"user_index", problem.internal_to_user[i]},
                  {"prior_mean", problem.prior.mean(i)}};
        if (is_beta(problem.prior.atoms[i])) {
            const auto& b = std::get<BetaParams>(problem.prior.atoms[i]);
            a["beta"] = {b.alpha, b.beta};
        }
        atoms.push_back(a);
    }
    return atoms;
}

inline int cmd_constants(const json& config, const std::string& outdir) {
    cfg::check_keys(config,
                    {"seed", "threads", "out", "prior", "family", "constants"},
                    "config");
    const std::uint64_t seed = resolve_seed(config);
    const ArmFamily user_family = parse_family(cfg::require(config, "family", "config"));
    const ProductPrior user_prior =
        parse_prior(cfg::require(config, "prior", "config"), user_family.d);
    const Problem problem = canonicalize(user_prior, user_family);

    const json& c = cfg::require(config, "constants", "config");
    cfg::check_keys(c, {"which", "mc_samples", "c_ts", "delta", "c1", "c2", "n_ph", "corollary"},
                    "constants");
    const std::string which = cfg::get_string(c, "which", "constants");

    json out = {{"which", which}, {"seed", seed}};
    bool degenerate = false;
    if (which == "ts") {
        RngStream rng(seed, kConstantsStream);
        const auto k = estimate_ts_constants(problem.prior, problem.family,
                                             cfg::get_count_or(c, "mc_samples", 100000),
                                             cfg::get_number_or(c, "c_ts", 1.0), rng, seed);
        out["ts"] = ts_constants_json(k);
    } else if (which == "property_p_fixed" || which == "property_p_general") {
        const auto rep = property_p_report(problem.prior, problem.family,
                                           which == "property_p_fixed" ? "fixed" : "general");
        out["property_p"] = property_p_json(rep);
        degenerate = rep.degenerate;
        if (c.contains("corollary")) {
            const json& co = c.at("corollary");
            cfg::check_keys(co, {"c0", "c", "c_prime"}, "constants.corollary");
            const auto cr = corollary_n0(problem.prior, rep, cfg::get_number(co, "c0", "corollary"),
                                         cfg::get_number(co, "c", "corollary"),
                                         cfg::get_number(co, "c_prime", "corollary"));
            out["corollary"] = {{"c0", cr.c0},           {"c", cr.c},
                                {"c_prime", cr.c_prime}, {"phi", cr.phi},
                                {"n0", cr.n0},           {"mean_ok", cr.mean_ok},
                                {"ceil_ok", cr.ceil_ok}, {"tau_ok", cr.tau_ok},
                                {"tau_threshold", cr.tau_threshold}};
        }
    } else if (which == "hh") {
        const TransitionGraph g = encoding_graph_for(problem.family);
        const auto k = estimate_hh_constants(
            problem.prior, g, cfg::get_number_or(c, "delta", 0.1),
            cfg::get_number_or(c, "c1", 1.0), cfg::get_number_or(c, "c2", 1.0),
            cfg::get_count_or(c, "n_ph", 0));
        out["hh"] = hh_constants_json(k);
        out["graph"] = graph_to_json(g);
    } else {
        cfg::bad("constants.which", "unknown constants kind '" + which + "'");
    }
    out["degenerate"] = degenerate;
    out["atoms"] = atoms_legend(problem);

    ArtifactWriter w(outdir);
    json resolved = config;
    resolved["seed"] = seed;
    w.write_json("resolved_config.json", resolved);
    w.write_json("constants.json", out);
    w.finish_manifest(resolved, seed, 0, 0.0);
    return 0;
}

// ---------------------------------------------------------------------------
// run subcommand.
// ---------------------------------------------------------------------------

inline int cmd_run(const json& config, const std::string& outdir) {
    cfg::check_keys(config,
                    {"seed", "threads", "out", "replicates", "horizon", "prior", "family",
                     "algorithm", "joint", "emit_rounds"},
                    "config");
    const std::uint64_t seed = resolve_seed(config);
    const unsigned threads =
        static_cast<unsigned>(cfg::get_count_or(config, "threads", 1));
    const std::uint64_t R = cfg::get_count_or(config, "replicates", 1);
    if (R < 1) cfg::bad("replicates", "must be >= 1");
    std::uint32_t T = static_cast<std::uint32_t>(cfg::get_count_or(config, "horizon", 0));
    const bool emit_rounds = !config.contains("emit_rounds") || config.at("emit_rounds").get<bool>();

    const json& algo = cfg::require(config, "algorithm", "config");
    const std::string algo_name = cfg::get_string(algo, "name", "algorithm");

    ArtifactWriter w(outdir);
    json resolved = config;
    resolved["seed"] = seed;
    resolved["replicates"] = R;
    resolved["threads"] = threads;

    std::string rounds_csv = "replicate,round,arm,reward,phase_label,is_exploration\n";
    std::vector<OnlineStat> regret_by_round;

    if (algo_name == "two-arm-correlated") {
        cfg::check_keys(algo, {"name", "joint"}, "algorithm");
        const TwoArmJointPrior joint = parse_two_arm(
            algo.contains("joint") ? algo.at("joint") : cfg::require(config, "joint", "config"));
        if (T < 1) cfg::bad("horizon", "must be >= 1");
        auto runs = parallel_replicates<TwoArmRun>(R, threads, [&](std::uint64_t rep) {
            RngStream rng(seed, kInstanceStreamBase + rep);
            return run_two_arm_correlated(joint, T, rng);
        });
        regret_by_round.resize(T);
        const Arm arm_ids[2] = {Arm::of({0}), Arm::of({1})};
        for (std::uint64_t rep = 0; rep < R; ++rep) {
            const auto& run = runs[rep];
            const double best = std::max(run.mu_a, run.mu_b);
            double cum = 0.0;
            for (std::uint32_t t = 0; t < T; ++t) {
                cum += best - (run.choices[t] == 0 ? run.mu_a : run.mu_b);
                regret_by_round[t].add(cum);
                if (emit_rounds)
                    rounds_csv += std::to_string(rep) + "," + std::to_string(t + 1) + "," +
                                  arm_ids[run.choices[t]].to_hex() + ",,0,0\n";
            }
        }
        resolved["horizon"] = T;
    } else {
        const ArmFamily user_family = parse_family(cfg::require(config, "family", "config"));
        const ProductPrior user_prior =
            parse_prior(cfg::require(config, "prior", "config"), user_family.d);
        const Problem problem = canonicalize(user_prior, user_family);
        BuiltAlgorithm built =
            build_algorithm(algo, problem.prior, problem.family, seed, "algorithm");
        if (built.fixed_rounds) T = *built.fixed_rounds;
        if (T < 1) cfg::bad("horizon", "must be >= 1");
        if (emit_rounds && R * static_cast<std::uint64_t>(T) > 2000000)
            fail(ErrorKind::BudgetExceeded,
                 "round log too large (replicates x horizon > 2e6); set emit_rounds=false");

        auto runs = parallel_replicates<AlgoRun>(R, threads, [&](std::uint64_t rep) {
            RngStream rng(seed, kInstanceStreamBase + rep);
            const Instance inst = sample_instance(problem.prior, rng);
            return built.run(inst, T, rng);
        });

        std::size_t max_rounds = 0;
        for (const auto& r : runs) max_rounds = std::max(max_rounds, r.round_gap.size());
        regret_by_round.resize(max_rounds);
        for (std::uint64_t rep = 0; rep < R; ++rep) {
            const auto& run = runs[rep];
            double cum = 0.0;
            for (std::size_t t = 0; t < run.round_gap.size(); ++t) {
                cum += run.round_gap[t];
                regret_by_round[t].add(cum);
            }
            if (emit_rounds)
                for (const auto& e : run.history.log)
                    rounds_csv += std::to_string(rep) + "," + std::to_string(e.round) + "," +
                                  e.arm.to_hex() + "," + fmt_double(e.reward_sum()) + "," +
                                  std::to_string(e.phase) + "," +
                                  (e.exploration ? "1" : "0") + "\n";
        }
        resolved["horizon"] = T;
        resolved["algorithm_meta"] = built.meta;
        w.write_json("atoms.json", atoms_legend(problem));
    }

    std::string regret_csv = "round,mean_regret,stderr\n";
    for (std::size_t t = 0; t < regret_by_round.size(); ++t)
        regret_csv += std::to_string(t + 1) + "," + fmt_double(regret_by_round[t].mean) + "," +
                      fmt_double(regret_by_round[t].stderr_mean()) + "\n";

    w.write_json("resolved_config.json", resolved);
    if (emit_rounds) w.write("rounds.csv", rounds_csv);
    w.write("regret.csv", regret_csv);
    w.finish_manifest(resolved, seed, R, 0.0);
    return 0;
}

// ---------------------------------------------------------------------------
// verify subcommand.
// ---------------------------------------------------------------------------

inline std::string margins_csv(const std::vector<BicMarginTable>& tables) {
    std::string out = "round,arm,competitor,margin,ci_radius,mode,support_count\n";
    for (const auto& t : tables) {
        for (const auto& row : t.rows) {
            for (std::size_t j = 0; j < row.margin.size(); ++j) {
                if (j == row.arm) continue;
                out += std::to_string(t.round) + "," + t.arms[row.arm].to_hex() + "," +
                       t.arms[j].to_hex() + "," + fmt_double(row.margin[j]) + "," +
                       fmt_double(row.ci_radius[j]) + "," +
                       (t.mode == MarginMode::Exact ? "exact" : "mc") + "," +
                       std::to_string(row.support_count) + "\n";
            }
        }
    }
    return out;
}

inline std::vector<std::uint32_t> parse_rounds(const json& j, const std::string& where) {
    std::vector<std::uint32_t> rounds;
    if (j.is_array()) {
        for (const auto& r : j) rounds.push_back(r.get<std::uint32_t>());
    } else if (j.is_object()) {
        cfg::check_keys(j, {"from", "to"}, where);
        const auto from = cfg::get_count(j, "from", where);
        const auto to = cfg::get_count(j, "to", where);
        for (std::uint64_t r = from; r <= to; ++r)
            rounds.push_back(static_cast<std::uint32_t>(r));
    } else {
        cfg::bad(where, "expected an array or {from, to}");
    }
    if (rounds.empty()) cfg::bad(where, "empty rounds set");
    return rounds;
}

// Builds the exact policy named by an algorithm block (subset of the
// simulable algorithms: ts and hidden-exploration).
inline std::unique_ptr<ExactPolicy> build_exact_policy(const json& a, const ProductPrior& prior,
                                                       const ArmFamily& family,
                                                       const std::string& where, json& meta) {
    const std::string name = cfg::get_string(a, "name", where);
    if (name == "ts") return std::make_unique<ExactTsPolicy>(prior, family);
    if (name == "hidden-exploration") {
        HiddenExplorationPlan plan =
            hidden_exploration_plan_from_config(a, prior, family, where, meta);
        return std::make_unique<ExactHiddenExplorationPolicy>(
            prior, family, plan.sequence, static_cast<std::uint32_t>(plan.L),
            static_cast<std::uint32_t>(plan.N));
    }
    cfg::bad(where + ".name", "no exact oracle for algorithm '" + name + "'");
}

inline json run_verify_check(const json& check, const ProductPrior& prior,
                             const ArmFamily& family, std::uint64_t seed, unsigned threads,
                             ArtifactWriter& w, std::size_t index) {
    (void)threads;
    const std::string kind = cfg::get_string(check, "kind", "check");
    const std::string where = "verify.checks[" + std::to_string(index) + "]";
    json result = {{"kind", kind}};
    bool pass = false;

    if (kind == "bic_mc") {
        cfg::check_keys(check, {"kind", "algorithm", "rounds", "replicates"}, where);
        const json& a = cfg::require(check, "algorithm", where);
        const auto rounds = parse_rounds(cfg::require(check, "rounds", where), where + ".rounds");
        const std::uint64_t reps = cfg::get_count_or(check, "replicates", 10000);
        McScenario sc;
        if (cfg::get_string(a, "name", where) == "two-arm-correlated") {
            sc = make_two_arm_scenario(parse_two_arm(cfg::require(a, "joint", where)));
        } else {
            json meta;
            BuiltAlgorithm built = build_algorithm(a, prior, family, seed, where + ".algorithm");
            sc = make_semibandit_scenario(prior, family, built.run);
            result["algorithm_meta"] = built.meta;
        }
        const auto tables = bic_margin_mc(sc, rounds, reps, seed);
        pass = true;
        double worst = INFINITY;
        for (const auto& t : tables) {
            pass = pass && t.all_pass();
            worst = std::min(worst, t.min_margin());
        }
        result["min_margin"] = worst;
        w.write("margins_check" + std::to_string(index) + ".csv", margins_csv(tables));
    } else if (kind == "bic_exact") {
        cfg::check_keys(check, {"kind", "algorithm", "round", "budget"}, where);
        const json& a = cfg::require(check, "algorithm", where);
        const std::uint32_t round =
            static_cast<std::uint32_t>(cfg::get_count(check, "round", where));
        const std::uint64_t budget = cfg::get_count_or(check, "budget", 10000000);
        BicMarginTable table;
        if (cfg::get_string(a, "name", where) == "two-arm-correlated") {
            table = bic_margin_exact_two_arm(parse_two_arm(cfg::require(a, "joint", where)),
                                             round, budget);
        } else {
            json meta;
            auto policy = build_exact_policy(a, prior, family, where + ".algorithm", meta);
            table = bic_margin_exact(*policy, prior, family, round, budget);
            result["algorithm_meta"] = meta;
        }
        result["min_margin"] = table.min_margin();
        pass = table.min_margin() >= -1e-12;
        w.write("margins_check" + std::to_string(index) + ".csv", margins_csv({table}));
    } else if (kind == "exact_vs_mc") {
        cfg::check_keys(check, {"kind", "algorithm", "round", "replicates", "budget",
                                "stderr_units", "min_agreement"},
                        where);
        const json& a = cfg::require(check, "algorithm", where);
        const std::uint32_t round =
            static_cast<std::uint32_t>(cfg::get_count(check, "round", where));
        const std::uint64_t reps = cfg::get_count_or(check, "replicates", 100000);
        const double units = cfg::get_number_or(check, "stderr_units", 4.0);
        const double min_agreement = cfg::get_number_or(check, "min_agreement", 0.99);
        json meta;
        auto policy = build_exact_policy(a, prior, family, where + ".algorithm", meta);
        const BicMarginTable exact =
            bic_margin_exact(*policy, prior, family, round, cfg::get_count_or(check, "budget", 10000000));
        BuiltAlgorithm built = build_algorithm(a, prior, family, seed, where + ".algorithm");
        const auto mc_tables =
            bic_margin_mc(make_semibandit_scenario(prior, family, built.run), {round}, reps, seed);
        const auto& mc = mc_tables[0];
        std::uint64_t cells = 0, agree = 0;
        for (const auto& er : exact.rows) {
            const BicMarginRow* mr = nullptr;
            for (const auto& r : mc.rows)
                if (r.arm == er.arm) mr = &r;
            for (std::size_t j = 0; j < er.margin.size(); ++j) {
                if (j == er.arm) continue;
                ++cells;
                if (mr && mr->support_count > 0) {
                    const double se = mr->ci_radius[j] / kZ99;
                    if (std::abs(mr->margin[j] - er.margin[j]) <=
                        units * std::max(se, 1e-300))
                        ++agree;
                }
            }
        }
        const double frac = cells ? static_cast<double>(agree) / cells : 1.0;
        result["cells"] = cells;
        result["agree"] = agree;
        result["agreement"] = frac;
        pass = frac >= min_agreement;
        w.write("margins_check" + std::to_string(index) + "_exact.csv", margins_csv({exact}));
        w.write("margins_check" + std::to_string(index) + "_mc.csv", margins_csv({mc}));
    } else if (kind == "property_p") {
        cfg::check_keys(check, {"kind", "variant", "N", "replicates", "force_event"}, where);
        const std::string variant =
            check.contains("variant") ? check.at("variant").get<std::string>() : "fixed";
        const PropertyPReport rep = property_p_report(prior, family, variant);
        if (rep.degenerate) {
            result["degenerate"] = true;
            pass = false;
        } else {
            RngStream rng(seed, kConstantsStream + 1);
            const auto checks = property_p_empirical(
                prior, family, rep, cfg::get_count_or(check, "N", rep.n_p),
                cfg::get_count_or(check, "replicates", 10000), rng,
                check.contains("force_event") && check.at("force_event").get<bool>());
            pass = true;
            json phases = json::array();
            for (const auto& c : checks) {
                pass = pass && c.pass;
                phases.push_back({{"phase", c.phase},
                                  {"pr_hat", c.pr_hat},
                                  {"stderr", c.stderr},
                                  {"log_event_prob", c.log_event_prob},
                                  {"pass", c.pass}});
            }
            result["phases"] = phases;
        }
    } else if (kind == "esseen") {
        cfg::check_keys(check, {"kind", "intervals", "delta", "replicates"}, where);
        std::vector<std::pair<double, double>> intervals;
        for (const auto& iv : cfg::require(check, "intervals", where))
            intervals.push_back({iv[0].get<double>(), iv[1].get<double>()});
        RngStream rng(seed, kConstantsStream + 2);
        const auto res = esseen_experiment(intervals, family,
                                           cfg::get_number(check, "delta", where),
                                           cfg::get_count_or(check, "replicates", 100000), rng);
        result["freq_below"] = res.freq_below;
        result["bound"] = res.bound;
        result["threshold"] = res.threshold;
        result["premise_ok"] = res.premise_ok;
        pass = res.premise_ok ? res.pass : false;
        if (!res.premise_ok) result["note"] = "degenerate intervals violate the lemma's premise";
    } else if (kind == "harris") {
        cfg::check_keys(check, {"kind", "n", "atoms", "replicates"}, where);
        Arm atoms;
        if (check.contains("atoms")) {
            for (const auto& x : check.at("atoms")) atoms.bits |= (1ULL << x.get<std::uint32_t>());
        } else {
            atoms.bits = family.d == 64 ? ~0ULL : ((1ULL << family.d) - 1);
        }
        RngStream rng(seed, kConstantsStream + 3);
        const auto checks = harris_spotcheck(prior, cfg::get_count(check, "n", where), atoms,
                                             cfg::get_count_or(check, "replicates", 10000), rng);
        pass = true;
        json rows = json::array();
        for (const auto& c : checks) {
            pass = pass && c.pass;
            rows.push_back({{"atom", c.atom},
                            {"lhs", c.lhs},
                            {"rhs", c.rhs},
                            {"mc_estimate", c.mc_estimate},
                            {"pass", c.pass}});
        }
        result["atoms"] = rows;
    } else if (kind == "hh_coverage") {
        cfg::check_keys(check, {"kind", "delta", "c1", "c2", "n_ph", "replicates"}, where);
        const TransitionGraph g = encoding_graph_for(family);
        const double delta = cfg::get_number_or(check, "delta", 0.1);
        const HhConstants k = estimate_hh_constants(
            prior, g, delta, cfg::get_number_or(check, "c1", 1.0),
            cfg::get_number_or(check, "c2", 1.0), cfg::get_count_or(check, "n_ph", 0));
        const std::uint64_t reps = cfg::get_count_or(check, "replicates", 500);
        const std::uint64_t n0 = static_cast<std::uint64_t>(std::min(k.n0, 4e18));
        std::uint64_t covered = 0;
        for (std::uint64_t rep = 0; rep < reps; ++rep) {
            RngStream rng(seed, kInstanceStreamBase + rep);
            const Instance inst = sample_instance(prior, rng);
            const HhRun run = hidden_hallucination(prior, g, k, inst, n0, rng);
            if (run.covered) ++covered;
        }
        const double freq = static_cast<double>(covered) / static_cast<double>(reps);
        const double se = freq_stderr(freq, reps);
        result["coverage_freq"] = freq;
        result["target"] = 1.0 - delta;
        result["constants"] = hh_constants_json(k);
        pass = freq >= 1.0 - delta - 3.0 * se;
    } else {
        cfg::bad(where + ".kind", "unknown check kind '" + kind + "'");
    }
    result["pass"] = pass;
    return result;
}

inline int cmd_verify(const json& config, const std::string& outdir) {
    cfg::check_keys(config, {"seed", "threads", "out", "prior", "family", "verify"}, "config");
    const std::uint64_t seed = resolve_seed(config);
    const unsigned threads =
        static_cast<unsigned>(cfg::get_count_or(config, "threads", 1));

    const ArmFamily user_family = parse_family(cfg::require(config, "family", "config"));
    const ProductPrior user_prior =
        parse_prior(cfg::require(config, "prior", "config"), user_family.d);
    const Problem problem = canonicalize(user_prior, user_family);

    const json& v = cfg::require(config, "verify", "config");
    cfg::check_keys(v, {"checks"}, "verify");
    const json& checks = cfg::require(v, "checks", "verify");
    if (!checks.is_array() || checks.empty()) cfg::bad("verify.checks", "expected checks");

    ArtifactWriter w(outdir);
    json results = json::array();
    bool all_pass = true;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const json r =
            run_verify_check(checks[i], problem.prior, problem.family, seed, threads, w, i);
        all_pass = all_pass && r.at("pass").get<bool>();
        results.push_back(r);
    }
    json resolved = config;
    resolved["seed"] = seed;
    w.write_json("resolved_config.json", resolved);
    w.write_json("summary.json", {{"all_pass", all_pass}, {"checks", results}});
    w.finish_manifest(resolved, seed, 0, 0.0);
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// sweep subcommand.
// ---------------------------------------------------------------------------

inline void set_dotted(json& j, const std::string& path, const json& value) {
    json* cur = &j;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot - pos);
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        pos = dot + 1;
    }
}

// Flatten numeric leaves of a JSON document into metric rows.
inline void flatten_metrics(const json& j, const std::string& prefix,
                            std::vector<std::pair<std::string, double>>& out) {
    if (j.is_number()) {
        out.push_back({prefix, j.get<double>()});
    } else if (j.is_boolean()) {
        out.push_back({prefix, j.get<bool>() ? 1.0 : 0.0});
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten_metrics(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            flatten_metrics(j[i], prefix + "[" + std::to_string(i) + "]", out);
    }
}

inline int cmd_sweep(const json& config, const std::string& outdir);

// Runs one grid point in-memory and returns (metric, value) rows.
inline std::vector<std::pair<std::string, double>> sweep_point_metrics(
    const std::string& command, const json& point_config, const std::string& tmpdir) {
    std::vector<std::pair<std::string, double>> metrics;
    if (command == "constants") {
        cmd_constants(point_config, tmpdir);
        std::ifstream f(tmpdir + "/constants.json");
        json out = json::parse(f);
        out.erase("atoms");
        flatten_metrics(out, "", metrics);
    } else if (command == "run") {
        json pc = point_config;
        pc["emit_rounds"] = false;
        cmd_run(pc, tmpdir);
        std::ifstream f(tmpdir + "/regret.csv");
        std::string line, last;
        std::getline(f, line);  // header
        std::uint64_t rows = 0;
        while (std::getline(f, line))
            if (!line.empty()) {
                last = line;
                ++rows;
            }
        if (!last.empty()) {
            const auto c1 = last.find(','), c2 = last.find(',', c1 + 1);
            metrics.push_back({"final_round", std::stod(last.substr(0, c1))});
            metrics.push_back({"mean_regret", std::stod(last.substr(c1 + 1, c2 - c1 - 1))});
            metrics.push_back({"regret_stderr", std::stod(last.substr(c2 + 1))});
        }
    } else {
        cfg::bad("sweep.command", "unknown sweep command '" + command + "'");
    }
    return metrics;
}

inline int cmd_sweep(const json& config, const std::string& outdir) {
    const json& sweep = cfg::require(config, "sweep", "config");
    cfg::check_keys(sweep, {"command", "grid"}, "sweep");
    const std::string command = cfg::get_string(sweep, "command", "sweep");
    const json& grid = cfg::require(sweep, "grid", "sweep");
    if (!grid.is_object() || grid.empty()) cfg::bad("sweep.grid", "expected grid variables");

    std::vector<std::string> names;
    std::vector<std::vector<json>> values;
    std::uint64_t points = 1;
    for (auto it = grid.begin(); it != grid.end(); ++it) {
        if (!it.value().is_array() || it.value().empty())
            cfg::bad("sweep.grid." + it.key(), "expected a non-empty array");
        names.push_back(it.key());
        values.push_back(std::vector<json>(it.value().begin(), it.value().end()));
        points *= values.back().size();
        if (points > 10000) fail(ErrorKind::BudgetExceeded, "grid larger than 1e4 points");
    }

    json base = config;
    base.erase("sweep");

    ArtifactWriter w(outdir);
    std::string csv = "point";
    for (const auto& n : names) csv += "," + n;
    csv += ",metric,value\n";

    std::vector<std::size_t> pick(names.size(), 0);
    std::uint64_t point_ix = 0;
    for (;;) {
        json pc = base;
        std::string grid_cols;
        for (std::size_t i = 0; i < names.size(); ++i) {
            set_dotted(pc, names[i], values[i][pick[i]]);
            grid_cols += "," + values[i][pick[i]].dump();
        }
        const std::string tmpdir = w.outdir() + "/point" + std::to_string(point_ix);
        for (const auto& [metric, value] : sweep_point_metrics(command, pc, tmpdir))
            csv += std::to_string(point_ix) + grid_cols + "," + metric + "," +
                   fmt_double(value) + "\n";
        std::filesystem::remove_all(tmpdir);
        ++point_ix;
        std::size_t i = 0;
        while (i < pick.size() && ++pick[i] == values[i].size()) {
            pick[i] = 0;
            ++i;
        }
        if (i == pick.size()) break;
    }

    json resolved = config;
    resolved["seed"] = resolve_seed(config);
    w.write_json("resolved_config.json", resolved);
    w.write("sweep.csv", csv);
    w.finish_manifest(resolved, resolved["seed"].get<std::uint64_t>(), 0, 0.0);
    return 0;
}

// Dispatch by subcommand name; maps library errors to exit codes
// (0 ok, 1 verification failure, 2 config error, 3 budget exceeded).
inline int run_command(const std::string& command, const json& config, const std::string& outdir) {
    if (command == "constants") return cmd_constants(config, outdir);
    if (command == "run") return cmd_run(config, outdir);
    if (command == "verify") return cmd_verify(config, outdir);
    if (command == "sweep") return cmd_sweep(config, outdir);
    cfg::bad("command", "unknown subcommand '" + command + "'");
}

inline int exit_code_for(const SbError& e) {
    switch (e.kind()) {
        case ErrorKind::ConfigError: return 2;
        case ErrorKind::BudgetExceeded: return 3;
        default: return 1;
    }
}

}  // namespace semibandit::harness
