#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "latgibbs/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"lattice Gibbs free-energy laboratory"};
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool check_only = false;

    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--threads", threads, "worker threads (speed only, never results)");
    app.add_flag("--check", check_only, "validate the config without running estimators");

    CLI11_PARSE(app, argc, argv);

    latgibbs::ExperimentConfig config;
    try {
        config = latgibbs::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (seed_set) config.seed = seed;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (threads > 0) config.threads = threads;

    if (check_only) {
        latgibbs::ValidationReport rep = latgibbs::validate_config(config);
        for (const auto& d : rep.diagnostics) std::cout << "diagnostic: " << d << "\n";
        for (const auto& c : rep.hypotheses.checks)
            std::cout << "hypothesis " << c.name << ": " << c.status
                      << (c.detail.empty() ? "" : " (" + c.detail + ")")
                      << " fitted=" << c.fitted_constant << "\n";
        std::cout << (rep.ok ? "config ok" : "config has problems") << "\n";
        return rep.ok ? 0 : 1;
    }

    latgibbs::ValidationReport rep = latgibbs::validate_config(config);
    if (!rep.ok) {
        for (const auto& d : rep.diagnostics) std::cerr << "error: " << d << "\n";
        return 2;
    }

    try {
        latgibbs::RunResult res = latgibbs::run(config);
        for (const auto& m : res.messages) std::cerr << m << "\n";
        std::cout << "csv: " << res.csv_path << "\n";
        std::cout << "manifest: " << res.manifest_path << "\n";
        if (!res.summary_path.empty()) std::cout << "summary: " << res.summary_path << "\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
