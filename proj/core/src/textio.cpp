#include "fkv/io.hpp"

#include "fkv/errors.hpp"

#include <charconv>
#include <ostream>

namespace fkv {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, value >>= 4) s[i] = digits[value & 0xf];
    return s;
}

std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_header(std::ostream& out, const OutputHeader& h) {
    out << "# fkv " << h.version << ' ' << h.kind << '\n';
    out << "# config_hash " << h.config_hash << '\n';
    out << "# timestamp " << h.timestamp << " wall_time " << format_double(h.wall_time) << '\n';
}

void write_kernel_table(std::ostream& out, const KernelSamples& s) {
    out << "j t g dg d2g\n";
    for (int j = 0; j <= s.n; ++j)
        out << j << ' ' << format_double(j * s.tau) << ' ' << format_double(s.values[j]) << ' '
            << format_double(s.first_diffs[j]) << ' ' << format_double(s.second_diffs[j])
            << '\n';
}

void write_snapshots(std::ostream& out, const DiscreteTrajectory& traj, const CrackedMesh& mesh,
                     int stride) {
    if (stride < 1) throw ValidationError("snapshot stride must be positive");
    const int nc = mesh.components();
    out << "step t node x y u_1" << (nc == 2 ? " u_2" : "") << '\n';
    for (int j = 0; j <= traj.n; ++j) {
        if (j % stride != 0 && j != traj.n) continue;
        const Eigen::VectorXd& u = traj.at(j);
        for (int i = 0; i < mesh.num_nodes(); ++i) {
            out << j << ' ' << format_double(j * traj.tau) << ' ' << i << ' '
                << format_double(mesh.nodes[i].x()) << ' ' << format_double(mesh.nodes[i].y());
            for (int c = 0; c < nc; ++c) out << ' ' << format_double(u[i * nc + c]);
            out << '\n';
        }
    }
}

void write_ledger(std::ostream& out, const EnergyLedger& ledger) {
    out << "# initial_energy " << format_double(ledger.initial_energy) << " scale "
        << format_double(ledger.scale) << '\n';
    out << "step t kinetic elastic memory history_lag history_origin history_double "
           "tau2_inertia tau2_elastic tau2_memory tau2_history work lhs rhs residual "
           "margin_discrete margin_energy\n";
    for (const LedgerRow& r : ledger.rows) {
        out << r.step;
        for (double v : {r.t, r.kinetic, r.elastic, r.memory, r.history_lag, r.history_origin,
                         r.history_double, r.tau2_inertia, r.tau2_elastic, r.tau2_memory,
                         r.tau2_history, r.work, r.lhs, r.rhs, r.residual, r.margin_discrete,
                         r.margin_energy})
            out << ' ' << format_double(v);
        out << '\n';
    }
}

void write_columns(std::ostream& out, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size()) throw ValidationError("column names do not match columns");
    const std::size_t rows = columns.empty() ? 0 : columns[0].size();
    for (const auto& col : columns)
        if (col.size() != rows) throw ValidationError("columns differ in length");
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? " " : "") << names[c];
    out << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << (c ? " " : "") << format_double(columns[c][r]);
        out << '\n';
    }
}

} // namespace fkv
