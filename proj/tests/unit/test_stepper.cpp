#include "fkv/analysis.hpp"
#include "fkv/errors.hpp"
#include "fkv/stepper.hpp"

#include "problems.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace fkv;
using namespace fkv::testing;

TEST(Stepper, ZeroDataStaysAtRest) {
    GeometrySpec g;
    g.elements = 10;
    g.dirichlet = {"left"};
    auto mesh = std::make_shared<const CrackedMesh>(build_mesh(g));
    Material m = Material::create(scalar_tensor(1, 1.0), scalar_tensor(1, 1.0));
    const auto k = RegularizedKernel::shifted(FractionalKernel(0.5, m.viscous), 0.01);
    const Problem p = make_problem(mesh, {}, m, k, ProblemData::zero(1), 1.0);
    const DiscreteTrajectory tr = solve(p, steps(20));
    ASSERT_EQ(tr.u.size(), 22u);
    for (const auto& u : tr.u) EXPECT_EQ(u.norm(), 0.0);
}

TEST(Stepper, StaticEquilibriumIsExact) {
    const Problem p = oracle_problem(OracleCase::Static);
    const DiscreteTrajectory tr = solve(p, steps(50));
    const Eigen::VectorXd u0 = tr.at(0);
    for (int j = 1; j <= 50; ++j) EXPECT_LT((tr.at(j) - u0).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Stepper, TranslationHasZeroSecondDifference) {
    const Problem p = oracle_problem(OracleCase::Translation);
    const DiscreteTrajectory tr = solve(p, steps(40));
    for (int j = 1; j <= 40; ++j) {
        EXPECT_LT(tr.d2u[j].lpNorm<Eigen::Infinity>(), 1e-10) << j;
        EXPECT_NEAR(tr.du[j][0], 0.3, 1e-12);
        EXPECT_NEAR(tr.du[j][1], -0.1, 1e-12);
    }
}

TEST(Stepper, InitialLevelsUseVelocity) {
    const Problem p = oracle_problem(OracleCase::Translation);
    const DiscreteTrajectory tr = solve(p, steps(10));
    EXPECT_NEAR((tr.at(0) - tr.at(-1)).maxCoeff(), 0.3 * 0.1, 1e-15);
    EXPECT_TRUE(tr.du[0].isApprox(p.data.u1.nodal(*p.mesh, 0.0)));
}

TEST(Stepper, StepsMustBeSequential) {
    const Problem p = bar_problem(16);
    const KernelSamples s = sample_grid(p.kernel, 10, p.T);
    auto ctx = init(p, s, steps(10));
    EXPECT_THROW(ctx->step_solve(2), PreconditionError);
    ctx->step_solve(1);
    EXPECT_THROW(ctx->step_solve(1), PreconditionError);
    EXPECT_EQ(ctx->last_step(), 1);
}

TEST(Stepper, RejectsMismatchedSamples) {
    const Problem p = bar_problem(16);
    const KernelSamples s = sample_grid(p.kernel, 12, p.T);
    EXPECT_THROW(init(p, s, steps(10)), PreconditionError);
}

TEST(Stepper, RejectsIncompatibleInitialData) {
    GeometrySpec g;
    g.elements = 4;
    g.dirichlet = {"left"};
    auto mesh = std::make_shared<const CrackedMesh>(build_mesh(g));
    Material m = Material::create(scalar_tensor(1, 1.0), scalar_tensor(1, 0.0));
    const auto k = RegularizedKernel::shifted(FractionalKernel(0.5, m.viscous), 0.01);
    ProblemData d = ProblemData::zero(1);
    d.u0 = SpaceTimeField::from_terms(1, {term(vec({1.0}))});
    EXPECT_THROW(make_problem(mesh, {}, m, k, d, 1.0), ValidationError);
    CrackSchedule bad;
    bad.release_time[0] = 0.1;
    bad.reglue_time[0] = 0.2;
    EXPECT_THROW(make_problem(mesh, bad, m, k, ProblemData::zero(1), 1.0), PreconditionError);
}

TEST(Stepper, RefactorsOnlyWhenCracksOpen) {
    const Problem p = plate_problem(8, true, 0.3, 0.6);
    const DiscreteTrajectory tr = solve(p, steps(20));
    EXPECT_EQ(tr.spaces.size(), 3u);
    EXPECT_EQ(tr.factorizations, 3);
    EXPECT_EQ(tr.space_index[5], 0);
    EXPECT_EQ(tr.space_index[6], 1);
    EXPECT_EQ(tr.space_index[12], 2);
    for (int j = 0; j <= 20; ++j) EXPECT_TRUE(tr.space(j).contains(tr.at(j) - tr.at(0), 1e-12));
}

TEST(Stepper, IterativeSolveMatchesDirect) {
    const Problem p = plate_problem(8, false, 0.0, 0.0);
    SolverConfig c = steps(20);
    const DiscreteTrajectory a = solve(p, c);
    c.linear_tol = 1e-13;
    const DiscreteTrajectory b = solve(p, c);
    double diff = 0, scale = 0;
    for (int j = 0; j <= 20; ++j) {
        diff = std::max(diff, (a.at(j) - b.at(j)).lpNorm<Eigen::Infinity>());
        scale = std::max(scale, a.at(j).lpNorm<Eigen::Infinity>());
    }
    EXPECT_LT(diff, 1e-10 * scale);
}

TEST(Stepper, AlgebraicAndVariationalResidualsAreSmall) {
    const Problem p = plate_problem(8, true, 0.2, 0.5, true);
    const KernelSamples s = sample_grid(p.kernel, 30, p.T);
    auto ctx = init(p, s, steps(30));
    const DiscreteTrajectory tr = run(*ctx);
    for (int j = 1; j <= 30; ++j) EXPECT_LT(tr.residuals[j], 1e-12);
    EXPECT_LT(variational_residual(p, s, tr, 9), 1e-12);
    EXPECT_GT(spd_certificate(p, s, steps(30), 9), 0.0);
}

TEST(Stepper, InterpolantsAgreeAtGridPoints) {
    const Problem p = bar_problem(16);
    const DiscreteTrajectory tr = solve(p, steps(10));
    for (int j = 1; j <= 10; ++j) {
        const double t = j * tr.tau;
        EXPECT_TRUE(tr.affine(t).isApprox(tr.at(j)));
        EXPECT_TRUE(tr.plus(t - 0.5 * tr.tau).isApprox(tr.at(j)));
        EXPECT_TRUE(tr.minus(t - 0.5 * tr.tau).isApprox(tr.at(j - 1)));
        EXPECT_TRUE(tr.affine(t - 0.5 * tr.tau).isApprox(0.5 * (tr.at(j) + tr.at(j - 1))));
        EXPECT_TRUE(tr.velocity_plus(t - 0.5 * tr.tau).isApprox(tr.du[j]));
    }
}

TEST(Checkpoint, RestartReproducesTheRun) {
    const Problem p = plate_problem(8, true, 0.3, 0.6);
    const int n = 20;
    const KernelSamples s = sample_grid(p.kernel, n, p.T);
    const DiscreteTrajectory full = solve(p, steps(n));

    auto first = init(p, s, steps(n));
    for (int j = 1; j <= 9; ++j) first->step_solve(j);
    std::stringstream bin;
    first->save_checkpoint(bin);

    auto second = init(p, s, steps(n));
    second->restore_checkpoint(bin);
    EXPECT_EQ(second->last_step(), 9);
    const DiscreteTrajectory resumed = run(*second);
    for (int j = -1; j <= n; ++j) EXPECT_EQ((resumed.at(j) - full.at(j)).norm(), 0.0) << j;
}

TEST(Checkpoint, HeaderIsValidated) {
    const Problem p = bar_problem(8);
    const KernelSamples s = sample_grid(p.kernel, 10, p.T);
    auto ctx = init(p, s, steps(10));
    ctx->step_solve(1);
    std::stringstream bin;
    ctx->save_checkpoint(bin);
    const std::string bytes = bin.str();
    EXPECT_EQ(bytes.substr(0, 7), "FKVCKPT");
    EXPECT_EQ(bytes.size(), 8u + 4 + 4 + 24 + 16 + 3 * 9 * 8);

    std::string corrupt = bytes;
    corrupt[0] = 'X';
    std::stringstream in1(corrupt);
    EXPECT_THROW(ctx->restore_checkpoint(in1), ValidationError);
    std::stringstream in2(bytes.substr(0, 30));
    EXPECT_THROW(ctx->restore_checkpoint(in2), ValidationError);

    const KernelSamples s2 = sample_grid(p.kernel, 12, p.T);
    auto other = init(p, s2, steps(12));
    std::stringstream in3(bytes);
    EXPECT_THROW(other->restore_checkpoint(in3), PreconditionError);

    ctx->take_trajectory();
    std::stringstream after;
    EXPECT_THROW(ctx->save_checkpoint(after), PreconditionError);
}

TEST(GeneralizedResidual, ShrinksUnderRefinement) {
    const Problem p = bar_problem(32);
    auto residual = [&](int n) {
        const DiscreteTrajectory tr = solve(p, steps(n));
        return check_generalized_residual(p, tr, default_test_family(p, tr)).max_abs;
    };
    const double r1 = residual(50), r2 = residual(100), r3 = residual(200);
    EXPECT_LT(r2, r1);
    EXPECT_LT(r3, r2);
    EXPECT_GT(r1 / r3, 3.0);
}

TEST(GeneralizedResidual, DetectsACorruptedTrajectory) {
    const Problem p = bar_problem(32);
    DiscreteTrajectory tr = solve(p, steps(100));
    const auto family = default_test_family(p, tr);
    const double clean = check_generalized_residual(p, tr, family).max_abs;
    const int dof = 16;
    for (int j = 50; j <= 100; ++j) tr.u[j + 1][dof] += 0.05;
    for (int j = 1; j <= 100; ++j) tr.du[j] = (tr.at(j) - tr.at(j - 1)) / tr.tau;
    const double dirty = check_generalized_residual(p, tr, family).max_abs;
    EXPECT_GT(dirty, 20.0 * clean);
}

TEST(GeneralizedResidual, RejectsTestsOutsideTheSpace) {
    const Problem p = bar_problem(8);
    const DiscreteTrajectory tr = solve(p, steps(10));
    TestFunction bad{0.0, 1.0, Eigen::VectorXd::Zero(p.mesh->ndof())};
    bad.shape[0] = 1.0;  // Dirichlet node
    EXPECT_THROW(check_generalized_residual(p, tr, {bad}), PreconditionError);
}
