// semibandit-bic: simulation and verification CLI for Bayesian
// incentive-compatible exploration in combinatorial semi-bandits.
//
//   semibandit-bic {constants|run|verify|sweep} --config <path>
//                  [--seed N] [--threads N] [--out DIR]
//
// Exit codes: 0 ok, 1 verification failure, 2 config error, 3 budget
// exceeded. SEMIBANDIT_SEED overrides the config seed.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "semibandit/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"BIC exploration in combinatorial semi-bandits"};
    app.require_subcommand(1);

    struct SubOpts {
        std::string config_path;
        std::string out;
        std::uint64_t seed = 0;
        bool seed_set = false;
        std::uint64_t threads = 0;
    };
    std::map<std::string, SubOpts> opts;
    for (const std::string name : {"constants", "run", "verify", "sweep"}) {
        auto* sub = app.add_subcommand(name);
        auto& o = opts[name];
        sub->add_option("--config", o.config_path, "JSON config path")->required();
        sub->add_option("--seed", o.seed, "override the config seed")
            ->each([&o](const std::string&) { o.seed_set = true; });
        sub->add_option("--threads", o.threads, "replicate-level worker threads");
        sub->add_option("--out", o.out, "output directory");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    const SubOpts& o = opts[command];

    semibandit::json config;
    try {
        std::ifstream f(o.config_path);
        if (!f) {
            std::cerr << "error: cannot open config " << o.config_path << "\n";
            return 2;
        }
        config = semibandit::json::parse(f);
    } catch (const std::exception& e) {
        std::cerr << "error: config parse failure: " << e.what() << "\n";
        return 2;
    }

    try {
        if (o.seed_set) config["seed"] = o.seed;
        if (o.threads > 0) config["threads"] = o.threads;
        std::string outdir = o.out;
        if (outdir.empty() && config.contains("out")) outdir = config.at("out").get<std::string>();
        if (outdir.empty()) outdir = "out";
        const int code = semibandit::harness::run_command(command, config, outdir);
        if (code == 0)
            std::cout << command << ": ok, artifacts in " << outdir << "\n";
        else
            std::cout << command << ": verification failure (see " << outdir << ")\n";
        return code;
    } catch (const semibandit::SbError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return semibandit::harness::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
