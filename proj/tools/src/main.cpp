#include "fkv/app/config.hpp"
#include "fkv/app/execute.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    using namespace fkv::app;

    CLI::App cli{"Fractional Kelvin-Voigt solver and verification harness"};
    std::string config_path;
    Overrides overrides;
    std::string mode, out_dir;
    int workers = 0;
    std::uint64_t seed = 0;
    bool strict = true;

    cli.add_option("config", config_path, "Run configuration (JSON)")->required();
    auto* mode_opt = cli.add_option("--mode", mode, "Override the mode")
                         ->check(CLI::IsMember({"run", "sweep", "convergence", "uniqueness",
                                                "positivity"}));
    auto* out_opt = cli.add_option("--out-dir", out_dir, "Output directory");
    auto* workers_opt = cli.add_option("--workers", workers, "Parallel runs in sweep mode")
                            ->check(CLI::PositiveNumber);
    auto* seed_opt = cli.add_option("--seed", seed, "Seed of the random audit vectors");
    cli.add_flag("--strict,!--no-strict", strict, "Reject unknown config keys (default on)");
    cli.set_version_flag("--version", "fkv " + version_string());
    CLI11_PARSE(cli, argc, argv);

    if (*mode_opt) overrides.mode = mode;
    if (*workers_opt) overrides.workers = workers;
    if (*seed_opt) overrides.seed = seed;
    if (*out_opt) overrides.out_dir = out_dir;
    else if (const char* env = std::getenv("FKV_OUT_DIR"); env && *env) overrides.out_dir = env;

    const ParseResult parsed = parse_config(config_path, strict, overrides);
    for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << '\n';
    if (!parsed.ok()) {
        for (const auto& e : parsed.errors) std::cerr << "error: " << e << '\n';
        return exit_invalid_config;
    }

    const ExecResult result = execute(*parsed.config, std::cout);
    if (!result.error.empty()) std::cerr << result.error << '\n';
    for (const auto& f : result.files) std::cout << "wrote " << f << '\n';
    return result.exit_code;
}
