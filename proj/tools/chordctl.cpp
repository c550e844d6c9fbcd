// chordctl <experiment> --config <path> [--seed N] [--out DIR] [--override key=value ...]
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "chord/experiments.hpp"

int main(int argc, char** argv) {
    using namespace chord;

    CLI::App app{"Chord control field experiments"};
    std::string experiment, config_path, out_dir;
    uint64_t seed = 0;
    std::vector<std::string> overrides;
    app.add_option("experiment", experiment, "one of: coeffs, toy, step_sweep, noise_ablation, risk, error_order, diagnostics")
        ->required();
    app.add_option("--config", config_path, "JSON config file")->required();
    auto* seed_opt = app.add_option("--seed", seed, "base seed (overrides config 'seed')");
    app.add_option("--out", out_dir, "output directory (overrides $CHORD_OUT_DIR and config 'output_dir')");
    app.add_option("--override", overrides, "dotted.key=value, applied after the config file")->take_all();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_code::ok : exit_code::usage;
    }

    try {
        RunContext ctx;
        ctx.config = load_config(config_path);
        for (const auto& o : overrides) apply_override(ctx.config, o);
        ctx.base_dir = std::filesystem::path(config_path).parent_path().string();
        if (ctx.base_dir.empty()) ctx.base_dir = ".";
        ctx.seed = seed_opt->count() ? seed : ctx.config.value("seed", uint64_t(0));
        if (!out_dir.empty())
            ctx.out_dir = out_dir;
        else if (const char* env = std::getenv("CHORD_OUT_DIR"); env && *env)
            ctx.out_dir = env;
        else
            ctx.out_dir = ctx.config.value("output_dir", std::string("out"));
        return run_experiment(experiment, ctx);
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return exit_code::divergence;
    } catch (const Error& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return exit_code::invariant_failure;
    }
}
