#include "fkv/errors.hpp"
#include "fkv/stepper.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>

namespace fkv {

namespace {

constexpr std::array<char, 8> magic = {'F', 'K', 'V', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t format_version = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(b, 4);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

} // namespace

void StepContext::save_checkpoint(std::ostream& out) const {
    const auto& tr = trajectory_;
    if (tr.u.empty()) throw PreconditionError("trajectory has been taken from this context");
    out.write(magic.data(), magic.size());
    put_u32(out, format_version);
    const char layout[4] = {'L', 8, 0, 0};
    out.write(layout, 4);
    put_u64(out, static_cast<std::uint64_t>(config_.n));
    put_u64(out, static_cast<std::uint64_t>(last_));
    put_u64(out, static_cast<std::uint64_t>(problem_.mesh->ndof()));
    put_f64(out, tr.tau);
    put_f64(out, tr.T);
    for (int j = -1; j <= last_; ++j)
        for (double v : tr.at(j)) put_f64(out, v);
    if (!out) throw ValidationError("checkpoint write failed");
}

void StepContext::restore_checkpoint(std::istream& in) {
    std::array<char, 8> head{};
    if (!in.read(head.data(), head.size()) || head != magic)
        throw ValidationError("not a checkpoint file");
    if (get_u32(in) != format_version) throw ValidationError("unsupported checkpoint version");
    char layout[4];
    if (!in.read(layout, 4) || layout[0] != 'L' || layout[1] != 8)
        throw ValidationError("checkpoint is not little-endian 64-bit");
    const auto n = static_cast<int>(get_u64(in));
    const auto last = static_cast<int>(get_u64(in));
    const auto ndof = static_cast<int>(get_u64(in));
    const double tau = get_f64(in);
    const double T = get_f64(in);
    if (n != config_.n || ndof != problem_.mesh->ndof() || tau != trajectory_.tau ||
        T != trajectory_.T || last < 0 || last > n)
        throw PreconditionError("checkpoint does not match this problem and grid");

    DiscreteTrajectory tr = trajectory_;
    for (int j = -1; j <= last; ++j) {
        Eigen::VectorXd v(ndof);
        for (int i = 0; i < ndof; ++i) v[i] = get_f64(in);
        tr.u[j + 1] = std::move(v);
    }
    for (int j = last + 1; j <= n; ++j) tr.u[j + 1] = Eigen::VectorXd();
    tr.spaces.resize(1);
    tr.space_index.assign(n + 1, -1);
    tr.space_index[0] = 0;
    for (int j = 1; j <= last; ++j) {
        tr.du[j] = (tr.at(j) - tr.at(j - 1)) / tr.tau;
        tr.d2u[j] = (tr.du[j] - tr.du[j - 1]) / tr.tau;
        ConstrainedSpace s = space_at(*problem_.mesh, problem_.schedule, j, tr.tau);
        if (!s.same_constraints(tr.spaces.back())) tr.spaces.push_back(std::move(s));
        tr.space_index[j] = static_cast<int>(tr.spaces.size()) - 1;
    }
    adopt(tr);
}

} // namespace fkv
