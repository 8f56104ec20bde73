#pragma once

#include "fkv/app/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fkv::app {

inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_invalid_config = 2;
inline constexpr int exit_runtime_error = 3;

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
};

struct ExecResult {
    int exit_code = exit_ok;
    std::vector<Check> checks;
    std::vector<std::string> files;
    std::string error;
};

// Runs the configured mode and writes its artifacts; `log` receives one line
// per check.
ExecResult execute(const RunConfig& config, std::ostream& log);

std::string version_string();

} // namespace fkv::app
