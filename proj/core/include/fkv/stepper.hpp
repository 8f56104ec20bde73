#pragma once

#include "fkv/assembly.hpp"
#include "fkv/domain.hpp"
#include "fkv/kernel.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fkv {

struct Problem {
    std::shared_ptr<const CrackedMesh> mesh;
    CrackSchedule schedule;
    Material material;
    RegularizedKernel kernel;
    ProblemData data;
    double T = 1.0;
};

// Checks dimensions and data compatibility; the kernel takes the material's
// viscous tensor.
Problem make_problem(std::shared_ptr<const CrackedMesh> mesh, CrackSchedule schedule,
                     Material material, const RegularizedKernel& kernel, ProblemData data,
                     double T);

struct SolverConfig {
    int n = 100;
    // Relative residual of a conjugate-gradient solve; empty selects the
    // sparse direct factorization.
    std::optional<double> linear_tol;
    bool deterministic = true;
    AssemblyOptions assembly;
};

struct DiscreteTrajectory {
    int n = 0;
    double tau = 0.0;
    double T = 0.0;
    std::vector<Eigen::VectorXd> u;    // u[j + 1] = u^j, j = -1..n
    std::vector<Eigen::VectorXd> du;   // j = 0..n
    std::vector<Eigen::VectorXd> d2u;  // j = 0..n, d2u[0] unused (zero)
    std::vector<ConstrainedSpace> spaces;
    std::vector<int> space_index;      // j = 0..n
    std::vector<double> residuals;     // relative algebraic residual, j = 1..n
    int factorizations = 0;

    const Eigen::VectorXd& at(int j) const { return u.at(j + 1); }
    const ConstrainedSpace& space(int j) const { return spaces.at(space_index.at(j)); }
    int interval(double t) const;

    Eigen::VectorXd affine(double t) const;
    Eigen::VectorXd plus(double t) const;
    Eigen::VectorXd minus(double t) const;
    Eigen::VectorXd velocity_affine(double t) const;
    Eigen::VectorXd velocity_plus(double t) const;
    Eigen::VectorXd velocity_minus(double t) const;
};

class StepContext {
public:
    StepContext(const Problem& problem, const KernelSamples& samples, const SolverConfig& config);
    StepContext(const StepContext&) = delete;
    StepContext& operator=(const StepContext&) = delete;
    ~StepContext();

    const Problem& problem() const { return problem_; }
    const SolverConfig& config() const { return config_; }
    const KernelSamples& samples() const { return samples_; }
    const Operators& operators() const { return ops_; }
    int last_step() const { return last_; }
    int factorizations() const { return trajectory_.factorizations; }

    const Eigen::VectorXd& step_solve(int j);
    // Reduced system matrix of the current constraint set.
    const SparseMatrix& system_matrix() const { return reduced_; }
    const DiscreteTrajectory& trajectory() const { return trajectory_; }
    DiscreteTrajectory take_trajectory();
    // Continue from the stored steps of a (possibly partial) trajectory.
    void adopt(const DiscreteTrajectory& traj);

    // Right-hand side r_j of A u^j = r_j on the full DOF vector, for j = last_step() + 1
    // or any earlier step whose predecessors are stored.
    Eigen::VectorXd full_rhs(int j) const;
    const SparseMatrix& full_matrix() const { return full_; }

    void save_checkpoint(std::ostream& out) const;
    void restore_checkpoint(std::istream& in);

private:
    void refactor(const ConstrainedSpace& space);
    Eigen::VectorXd history(int j) const;

    Problem problem_;
    KernelSamples samples_;
    SolverConfig config_;
    Operators ops_;
    DirichletSamples z_;
    SparseMatrix full_;
    SparseMatrix reduced_;
    SparseMatrix prolong_;
    ConstrainedSpace factored_;
    struct Solver;
    std::unique_ptr<Solver> solver_;
    DiscreteTrajectory trajectory_;
    int last_ = 0;
};

std::unique_ptr<StepContext> init(const Problem& problem, const KernelSamples& samples,
                                  const SolverConfig& config);
DiscreteTrajectory run(StepContext& ctx);
// Samples the problem's kernel on the config grid, then runs.
DiscreteTrajectory solve(const Problem& problem, const SolverConfig& config);

// vT A_j v for random v in every distinct constraint set; returns the smallest
// Rayleigh quotient seen.
double spd_certificate(const Problem& problem, const KernelSamples& samples,
                       const SolverConfig& config, std::uint64_t seed, int trials = 8);

// Largest |v^T (A u^j - r_j)| / (|v| |P^T r_j|) over random v in the step
// space, maximised over steps.
double variational_residual(const Problem& problem, const KernelSamples& samples,
                            const DiscreteTrajectory& traj, std::uint64_t seed, int trials = 4);

struct TestFunction {
    // Time factor sin^2(pi (t - start) / width) on [start, start + width].
    double start = 0.0;
    double width = 1.0;
    Eigen::VectorXd shape;

    double time_value(double t) const;
};

// Products of `bumps` time bumps and hat functions on up to `max_nodes`
// evenly spread unconstrained DOFs of the initial space.
std::vector<TestFunction> default_test_family(const Problem& problem, const DiscreteTrajectory& traj,
                                              int bumps = 5, int max_nodes = 32);

struct GeneralizedResidual {
    double max_abs = 0.0;
    std::vector<double> values;
};

GeneralizedResidual check_generalized_residual(const Problem& problem,
                                               const DiscreteTrajectory& traj,
                                               const std::vector<TestFunction>& family);

} // namespace fkv
