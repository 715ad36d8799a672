#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "mvlab/config.hpp"
#include "mvlab/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mvlab: mean-field SPDE simulation laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 0;

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path, "config file path")->required();
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--seed", seed, "master seed (overrides config)")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--workers", workers, "worker count (overrides config)");

    auto* validate = app.add_subcommand("validate", "validate a config file and echo it");
    validate->add_option("--config", config_path, "config file path")->required();

    app.add_subcommand("selftest", "run the built-in oracle suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("selftest")) {
            const mvlab::SelftestResult res = mvlab::selftest(&std::cout);
            std::cout << (res.pass ? "selftest: all oracles pass\n" : "selftest: FAILURES\n");
            return res.pass ? 0 : 1;
        }
        if (app.got_subcommand("validate")) {
            const mvlab::ExperimentConfig cfg = mvlab::validate_config(config_path);
            std::cout << mvlab::config_echo_text(cfg);
            for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
            return 0;
        }
        mvlab::ExperimentConfig cfg = mvlab::validate_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed_set) cfg.seed = seed;
        if (workers > 0) cfg.workers = workers;
        for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
        const mvlab::ReportBundle bundle = mvlab::run_experiment(cfg);
        std::cout << bundle.summary << "\n";
        std::cout << "manifest: " << bundle.manifest_path.string() << "\n";
        return bundle.pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
