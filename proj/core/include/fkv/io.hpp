#pragma once

#include "fkv/energy.hpp"
#include "fkv/kernel.hpp"
#include "fkv/stepper.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fkv {

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Shortest text that reads back to the same double.
std::string format_double(double v);

struct OutputHeader {
    std::string kind;
    std::string version;
    std::string config_hash;
    std::string timestamp;
    double wall_time = 0.0;
};

// Header lines start with '#'. Only the last one carries the timestamp and
// wall time, so two runs of one config differ in that line alone.
void write_header(std::ostream& out, const OutputHeader& header);

// Columns: j t g dg d2g of the scalar factor.
void write_kernel_table(std::ostream& out, const KernelSamples& samples);

// Columns: step t node x y u_1 [u_2], every `stride` steps and the last one.
void write_snapshots(std::ostream& out, const DiscreteTrajectory& traj, const CrackedMesh& mesh,
                     int stride);

void write_ledger(std::ostream& out, const EnergyLedger& ledger);

// Columns named in `names`, one row per entry of the equal-length columns.
void write_columns(std::ostream& out, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& columns);

} // namespace fkv
