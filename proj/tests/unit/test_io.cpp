#include "fkv/errors.hpp"
#include "fkv/io.hpp"

#include "problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <set>
#include <limits>
#include <random>
#include <sstream>

using namespace fkv;
using namespace fkv::testing;

TEST(Hash, KnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
    EXPECT_EQ(hex64(0xaf63dc4c8601ec8cull), "af63dc4c8601ec8c");
    EXPECT_EQ(hex64(1), "0000000000000001");
}

TEST(FormatDouble, ShortestForms) {
    EXPECT_EQ(format_double(0.0), "0");
    EXPECT_EQ(format_double(-0.0), "0");
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1e-20), "1e-20");
    EXPECT_EQ(format_double(-2.5), "-2.5");
}

TEST(FormatDoubleProperty, RoundTrips) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::uint64_t> bits;
    int checked = 0;
    while (checked < 10000) {
        const std::uint64_t b = bits(rng);
        double v;
        std::memcpy(&v, &b, sizeof v);
        if (!std::isfinite(v)) continue;
        EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
        ++checked;
    }
}

TEST(Header, ThreeLinesWithTimestampLast) {
    std::ostringstream out;
    write_header(out, {"ledger", "1.2.3", "00000000000000ff", "2020-01-01T00:00:00Z", 0.5});
    EXPECT_EQ(out.str(),
              "# fkv 1.2.3 ledger\n# config_hash 00000000000000ff\n"
              "# timestamp 2020-01-01T00:00:00Z wall_time 0.5\n");
}

TEST(Columns, RowsAndValidation) {
    std::ostringstream out;
    write_columns(out, {"a", "b"}, {{1.0, 2.0}, {0.25, -3.0}});
    EXPECT_EQ(out.str(), "a b\n1 0.25\n2 -3\n");
    std::ostringstream bad;
    EXPECT_THROW(write_columns(bad, {"a", "b"}, {{1.0}, {1.0, 2.0}}), ValidationError);
}

TEST(KernelTable, OneRowPerSample) {
    const auto k = RegularizedKernel::smooth(SmoothProfile::exponential(1.0, 1.0),
                                             scalar_tensor(1, 1.0));
    const KernelSamples s = sample_grid(k, 4, 1.0);
    std::ostringstream out;
    write_kernel_table(out, s);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "j t g dg d2g");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 5);
    EXPECT_NE(out.str().find("\n0 0 1 "), std::string::npos);
}

TEST(Snapshots, StrideKeepsFirstAndLast) {
    const Problem p = bar_problem(4);
    const DiscreteTrajectory tr = solve(p, steps(10));
    std::ostringstream out;
    write_snapshots(out, tr, *p.mesh, 4);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "step t node x y u_1");
    std::set<int> steps_seen;
    while (std::getline(in, line)) steps_seen.insert(std::stoi(line));
    EXPECT_EQ(steps_seen, (std::set<int>{0, 4, 8, 10}));
}

TEST(Ledger, HeaderAndRows) {
    const Problem p = bar_problem(4);
    const KernelSamples s = sample_grid(p.kernel, 6, p.T);
    auto ctx = init(p, s, steps(6));
    const DiscreteTrajectory tr = run(*ctx);
    std::ostringstream out;
    write_ledger(out, discrete_energy_audit(tr, s, p));
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# initial_energy ", 0), 0u);
    std::getline(in, line);
    EXPECT_EQ(line.rfind("step t kinetic elastic", 0), 0u);
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 6);
}
