#pragma once

#include "fkv/analysis.hpp"
#include "fkv/assembly.hpp"
#include "fkv/domain.hpp"
#include "fkv/stepper.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fkv::app {

enum class Mode { Run, Sweep, Convergence, Uniqueness, Positivity };

Mode parse_mode(const std::string& name);
const char* mode_name(Mode m);

struct KernelConfig {
    std::string type = "fractional";  // fractional | exponential | constant
    double alpha = 0.5;
    double epsilon = 1e-2;
    double amplitude = 1.0;
    double time_constant = 1.0;
    double value = 1.0;
};

struct OutputConfig {
    std::filesystem::path directory = "fkv-out";
    int snapshot_stride = 10;
    bool snapshots = true;
    bool ledger = true;
    bool kernel_table = true;
    bool continuous_energy = true;
    bool generalized_residual = true;
    bool checkpoint = false;
};

struct SweepConfig {
    double eps0 = 0.1;
    int levels = 5;
    int workers = 1;
};

struct ConvergenceConfig {
    OracleCase oracle = OracleCase::Wave;
    std::vector<int> ns{100, 200, 400};
};

struct UniquenessConfig {
    std::uint64_t permute_seed = 7;
    // Tolerance of the perturbed iterative run.
    double linear_tol = 1e-12;
};

struct PositivityConfig {
    int n_max = 256;
};

struct RunConfig {
    Mode mode = Mode::Run;
    std::shared_ptr<const CrackedMesh> mesh;
    CrackSchedule schedule;
    Material material;
    KernelConfig kernel;
    ProblemData data;
    double T = 1.0;
    SolverConfig solver;
    OutputConfig outputs;
    SweepConfig sweep;
    ConvergenceConfig convergence;
    UniquenessConfig uniqueness;
    PositivityConfig positivity;
    std::uint64_t seed = 1;

    // Canonical JSON text of the validated tree and its FNV-1a hash.
    std::string canonical;
    std::string hash;

    Problem problem() const;
};

struct Overrides {
    std::optional<std::string> mode;
    std::optional<std::filesystem::path> out_dir;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
};

struct ParseResult {
    std::optional<RunConfig> config;
    std::vector<std::string> errors;
    std::vector<std::string> warnings;

    bool ok() const { return config.has_value() && errors.empty(); }
};

// Relative mesh paths resolve against base_dir.
ParseResult parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                              bool strict = true, const Overrides& overrides = {});
ParseResult parse_config(const std::filesystem::path& path, bool strict = true,
                         const Overrides& overrides = {});

} // namespace fkv::app
