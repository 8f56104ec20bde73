#include "fkv/analysis.hpp"
#include "fkv/errors.hpp"

#include "problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace fkv;
using namespace fkv::testing;

namespace {

// Plate with a crack open from the start; interior nodes off the crack are
// shifted so that element contributions do not cancel exactly.
Problem jittered_plate(int cells, std::uint64_t seed) {
    GeometrySpec g;
    g.kind = GeometrySpec::Kind::Rectangle;
    g.nx = g.ny = cells;
    g.dirichlet = {"bottom"};
    g.cracks.push_back({0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.75, 0.5)}});
    CrackedMesh mesh = build_mesh(g);
    std::set<int> on_crack;
    for (const CrackPair& p : mesh.crack_pairs) {
        on_crack.insert(p.plus);
        on_crack.insert(p.minus);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> shift(-0.2 / cells, 0.2 / cells);
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        Eigen::Vector2d& x = mesh.nodes[i];
        const bool interior = x.x() > 1e-12 && x.x() < 1 - 1e-12 && x.y() > 1e-12 && x.y() < 1 - 1e-12;
        if (interior && !on_crack.count(i) && std::abs(x.y() - 0.5) > 1e-12) {
            x.x() += shift(rng);
            x.y() += shift(rng);
        }
    }
    CrackSchedule s;
    s.release_time[0] = 0.0;
    ProblemData d = ProblemData::zero(2);
    d.f = SpaceTimeField::from_terms(
        2, {term(vec({0.3, -0.2}), sine(4.0, 0.3), trig(std::numbers::pi, std::numbers::pi))});
    d.N = SpaceTimeField::from_terms(2, {term(vec({0.0, 0.2}), sine(3.0), monomial(0.0, 1.0))});
    Material m = Material::create(isotropic_tensor(1.0, 1.0), isotropic_tensor(0.5, 0.5));
    const auto k = RegularizedKernel::shifted(FractionalKernel(0.5, m.viscous), 1e-2);
    return make_problem(std::make_shared<const CrackedMesh>(std::move(mesh)), s, m, k, d, 1.0);
}

} // namespace

TEST(Sweep, InactiveWithoutViscosity) {
    const SweepReport r = epsilon_sweep(bar_problem(16, 0.0), 0.1, 3, steps(40));
    ASSERT_EQ(r.diff_linf_h.size(), 2u);
    for (double d : r.diff_linf_h) EXPECT_EQ(d, 0.0);
    for (double d : r.diff_l2_strain) EXPECT_EQ(d, 0.0);
    EXPECT_FALSE(r.strictly_decreasing());
}

TEST(Sweep, DifferencesDecrease) {
    const SweepReport r = epsilon_sweep(bar_problem(32), 0.1, 5, steps(200));
    ASSERT_EQ(r.epsilons.size(), 5u);
    EXPECT_DOUBLE_EQ(r.epsilons[4], 0.1 / 16);
    EXPECT_TRUE(r.strictly_decreasing());
    for (double m : r.min_margins) EXPECT_GE(m, -1e-10);
    for (double res : r.max_residuals) EXPECT_LT(res, 1e-8);
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
    const Problem p = bar_problem(16);
    const SweepReport a = epsilon_sweep(p, 0.1, 4, steps(50), 1);
    const SweepReport b = epsilon_sweep(p, 0.1, 4, steps(50), 3);
    EXPECT_EQ(a.diff_linf_h, b.diff_linf_h);
    EXPECT_EQ(a.diff_l2_strain, b.diff_l2_strain);
    EXPECT_EQ(a.min_margins, b.min_margins);
}

TEST(Sweep, DifferencesAreResolvedInTime) {
    const Problem p = bar_problem(32);
    const SweepReport a = epsilon_sweep(p, 0.1, 3, steps(200));
    const SweepReport b = epsilon_sweep(p, 0.1, 3, steps(400));
    for (std::size_t k = 0; k < a.diff_linf_h.size(); ++k)
        EXPECT_NEAR(a.diff_linf_h[k], b.diff_linf_h[k], 0.1 * b.diff_linf_h[k]);
}

TEST(Sweep, RejectsBadArguments) {
    EXPECT_THROW(epsilon_sweep(bar_problem(8), 0.0, 3, steps(10)), DomainError);
    EXPECT_THROW(epsilon_sweep(bar_problem(8), 0.1, 1, steps(10)), DomainError);
}

TEST(Positivity, ShiftedFractionalKernel) {
    const Material m = Material::create(scalar_tensor(1, 1.0), scalar_tensor(1, 1.0));
    const auto k = RegularizedKernel::shifted(FractionalKernel(0.4, m.viscous), 1e-2);
    const PositivityReport r = positivity_test(k, 64, 1.0);
    ASSERT_EQ(r.rows.size(), 4u);
    EXPECT_EQ(r.rows.back().n, 64);
    for (const PositivityRow& row : r.rows) {
        EXPECT_TRUE(row.pass);
        EXPECT_GE(row.min_eigenvalue, -1e-10 * row.norm);
    }
    EXPECT_TRUE(r.pass);
}

TEST(Positivity, ConstantKernel) {
    const auto k =
        RegularizedKernel::smooth(SmoothProfile::constant(2.0), scalar_tensor(1, 1.0));
    const PositivityReport r = positivity_test(k, 32, 1.0);
    EXPECT_TRUE(r.pass);
}

TEST(Positivity, IdentityResidualConverges) {
    const IdentityCheck c = kernel_identity_check([](double t) { return std::exp(-t); },
                                                  [](double t) { return -std::exp(-t); }, 64, 1.0,
                                                  3);
    EXPECT_GE(c.ratio, 1.5);
    EXPECT_LT(c.residual_fine, c.residual_coarse);
}

TEST(Positivity, RandomPathsAreReproducible) {
    const auto a = random_path(5), b = random_path(5), c = random_path(6);
    EXPECT_EQ(a(0.37), b(0.37));
    EXPECT_NE(a(0.37), c(0.37));
}

TEST(Uniqueness, IdenticalRunsAgreeExactly) {
    const Problem p = plate_problem(8, false, 0.0, 0.0);
    const UniquenessReport r = uniqueness_check(p, steps(20), {}, {});
    EXPECT_EQ(r.max_diff, 0.0);
    EXPECT_GT(r.scale, 0.0);
}

TEST(Uniqueness, ElementOrderChangesOnlyRounding) {
    const Problem p = jittered_plate(8, 11);
    UniquenessVariant permuted;
    permuted.assembly = permuted_order(p.mesh->num_elements(), 7);
    const UniquenessReport r = uniqueness_check(p, steps(20), {}, permuted);
    EXPECT_GT(r.max_diff, 0.0);
    EXPECT_LE(r.relative, 1e-10);
}

TEST(Uniqueness, IterativeDifferenceTracksTolerance) {
    const Problem p = jittered_plate(8, 11);
    UniquenessVariant tight, loose;
    tight.linear_tol = 1e-12;
    loose.linear_tol = 1e-9;
    const UniquenessReport a = uniqueness_check(p, steps(20), {}, tight);
    const UniquenessReport b = uniqueness_check(p, steps(20), {}, loose);
    EXPECT_LE(a.relative, 1e-8);
    EXPECT_LT(a.relative, b.relative);
}

TEST(Uniqueness, RequiresAFixedCrackSet) {
    const Problem p = plate_problem(8, true, 0.3, 0.6);
    EXPECT_THROW(uniqueness_check(p, steps(10), {}, {}), PreconditionError);
}

TEST(Uniqueness, PermutationIsAPermutation) {
    const AssemblyOptions o = permuted_order(50, 3);
    std::vector<int> sorted = o.element_order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_NE(o.element_order, sorted);
    EXPECT_EQ(permuted_order(50, 3).element_order, o.element_order);
}

TEST(Manufactured, WaveConvergesAtFirstOrder) {
    const ConvergenceReport r = manufactured_convergence(OracleCase::Wave, {25, 50, 100});
    ASSERT_EQ(r.rates.size(), 2u);
    for (double rate : r.rates) EXPECT_GE(rate, 0.8);
    EXPECT_LT(r.errors.back(), r.errors.front());
}

TEST(Manufactured, StaticAndTranslationAreExact) {
    for (OracleCase c : {OracleCase::Static, OracleCase::Translation}) {
        const ConvergenceReport r = manufactured_convergence(c, {10, 20});
        for (double e : r.errors) EXPECT_LT(e, 1e-10) << oracle_case_name(c);
    }
}

TEST(Manufactured, CaseNames) {
    for (OracleCase c : {OracleCase::Wave, OracleCase::Static, OracleCase::Translation})
        EXPECT_EQ(parse_oracle_case(oracle_case_name(c)), c);
    EXPECT_THROW(parse_oracle_case("spiral"), ValidationError);
}

TEST(BoundStudy, EnergyNormsStayBounded) {
    const BoundStudy b = uniform_bound_study(bar_problem(32), {50, 100, 200, 400});
    ASSERT_EQ(b.values.size(), 4u);
    for (double v : b.values) EXPECT_GT(v, 0.0);
    EXPECT_LT(b.variation, 0.1);
}

TEST(Norms, MatchMassAndStrain) {
    const Problem p = bar_problem(4);
    const Operators ops = assemble_operators(*p.mesh, p.material, p.kernel.visc());
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(p.mesh->ndof());
    EXPECT_NEAR(h_norm(ops, ones), 1.0, 1e-14);
    EXPECT_NEAR(strain_norm(ops, ones), 0.0, 1e-14);
}
