#include "fkv/stepper.hpp"

#include "fkv/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace fkv {

Problem make_problem(std::shared_ptr<const CrackedMesh> mesh, CrackSchedule schedule,
                     Material material, const RegularizedKernel& kernel, ProblemData data,
                     double T) {
    if (!mesh) throw ValidationError("problem needs a mesh");
    if (!(T > 0.0)) throw ValidationError("final time T must be positive");
    if (material.elastic.rows() != mandel_size(mesh->dim))
        throw ValidationError("material tensors do not match the mesh dimension");
    for (const SpaceTimeField* f : {&data.f, &data.N, &data.z, &data.u0, &data.u1})
        if (f->components() != mesh->components())
            throw ValidationError("data field components do not match the mesh");
    if (!check_h3(schedule)) throw PreconditionError("crack schedule is not monotone in time");

    const ConstrainedSpace s0 = space_at(*mesh, schedule, 0, T);
    const Eigen::VectorXd u0 = data.u0.nodal(*mesh, 0.0);
    const Eigen::VectorXd z0 = data.z.nodal(*mesh, 0.0);
    const double scale = 1.0 + u0.lpNorm<Eigen::Infinity>();
    for (int d : s0.dirichlet_dofs)
        if (std::abs(u0[d] - z0[d]) > 1e-12 * scale)
            throw ValidationError("initial displacement does not match the Dirichlet datum");

    RegularizedKernel k = kernel.with_visc(material.viscous);
    return Problem{std::move(mesh), std::move(schedule), std::move(material), std::move(k),
                   std::move(data), T};
}

int DiscreteTrajectory::interval(double t) const {
    if (t <= 0.0) return 0;
    const int j = static_cast<int>(std::ceil(t / tau - 1e-12));
    return std::clamp(j, 1, n);
}

Eigen::VectorXd DiscreteTrajectory::affine(double t) const {
    const int j = std::max(interval(t), 1);
    return at(j) + (t - j * tau) * du[j];
}

Eigen::VectorXd DiscreteTrajectory::plus(double t) const { return at(interval(t)); }

Eigen::VectorXd DiscreteTrajectory::minus(double t) const {
    const int j = interval(t);
    return at(j == 0 ? 0 : j - 1);
}

Eigen::VectorXd DiscreteTrajectory::velocity_affine(double t) const {
    const int j = std::max(interval(t), 1);
    return du[j] + (t - j * tau) * d2u[j];
}

Eigen::VectorXd DiscreteTrajectory::velocity_plus(double t) const { return du[interval(t)]; }

Eigen::VectorXd DiscreteTrajectory::velocity_minus(double t) const {
    const int j = interval(t);
    return du[j == 0 ? 0 : j - 1];
}

struct StepContext::Solver {
    Eigen::SimplicialLDLT<SparseMatrix> direct;
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> iterative;
    bool use_direct = true;
};

StepContext::StepContext(const Problem& problem, const KernelSamples& samples,
                         const SolverConfig& config)
    : problem_(problem), samples_(samples), config_(config), solver_(std::make_unique<Solver>()) {
    if (config_.n < 1) throw ValidationError("step count n must be at least 1");
    const double tau = problem_.T / config_.n;
    if (samples_.n != config_.n || std::abs(samples_.tau - tau) > 1e-14 * tau)
        throw PreconditionError("kernel samples were taken on a different time grid");
    if (config_.linear_tol && !(*config_.linear_tol > 0.0))
        throw ValidationError("linear_tol must be positive");
    const CrackedMesh& mesh = *problem_.mesh;
    ops_ = assemble_operators(mesh, problem_.material, samples_.visc, config_.assembly);
    z_ = dirichlet_samples(problem_.data, mesh, config_.n, problem_.T);
    full_ = ops_.mass / (tau * tau) + ops_.elastic + samples_.values[0] * ops_.viscous;
    full_ = 0.5 * (full_ + SparseMatrix(full_.transpose()));
    solver_->use_direct = !config_.linear_tol.has_value();

    auto& tr = trajectory_;
    tr.n = config_.n;
    tr.tau = tau;
    tr.T = problem_.T;
    const Eigen::VectorXd u0 = problem_.data.u0.nodal(mesh, 0.0);
    const Eigen::VectorXd u1 = problem_.data.u1.nodal(mesh, 0.0);
    tr.u.assign(config_.n + 2, Eigen::VectorXd());
    tr.du.assign(config_.n + 1, Eigen::VectorXd());
    tr.d2u.assign(config_.n + 1, Eigen::VectorXd());
    tr.u[0] = u0 - tau * u1;
    tr.u[1] = u0;
    tr.du[0] = u1;
    tr.d2u[0] = Eigen::VectorXd::Zero(mesh.ndof());
    tr.spaces.push_back(space_at(mesh, problem_.schedule, 0, tau));
    tr.space_index.assign(config_.n + 1, -1);
    tr.space_index[0] = 0;
    tr.residuals.assign(config_.n + 1, 0.0);
    refactor(space_at(mesh, problem_.schedule, 1, tau));
}

StepContext::~StepContext() = default;

void StepContext::refactor(const ConstrainedSpace& space) {
    factored_ = space;
    reduced_ = restrict_matrix(full_, space);
    prolong_ = space.prolongation();
    if (solver_->use_direct) {
        solver_->direct.compute(reduced_);
        if (solver_->direct.info() != Eigen::Success)
            throw SolveError(space.time_index, "system matrix factorization failed");
    } else {
        solver_->iterative.setTolerance(*config_.linear_tol);
        solver_->iterative.setMaxIterations(std::max(1000, 10 * space.num_free()));
        solver_->iterative.compute(reduced_);
    }
    ++trajectory_.factorizations;
}

Eigen::VectorXd StepContext::history(int j) const {
    const auto& tr = trajectory_;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(problem_.mesh->ndof());
    for (int k = 1; k < j; ++k) h += (tr.tau * samples_.first_diffs[j - k]) * (tr.at(k) - tr.at(0));
    return h;
}

Eigen::VectorXd StepContext::full_rhs(int j) const {
    const auto& tr = trajectory_;
    const CrackedMesh& mesh = *problem_.mesh;
    const double tau = tr.tau;
    Eigen::VectorXd r = ops_.mass * ((2.0 * tr.at(j - 1) - tr.at(j - 2)) / (tau * tau));
    if (samples_.visc.norm() > 0.0)
        r += ops_.viscous * (samples_.values[0] * tr.at(0) - history(j));
    r += load_vector(problem_.data, mesh, ops_.mass, j, tau);
    r += neumann_vector(problem_.data, mesh, ops_.boundary, j, tau);
    return r;
}

const Eigen::VectorXd& StepContext::step_solve(int j) {
    auto& tr = trajectory_;
    if (j != last_ + 1 || j > config_.n)
        throw PreconditionError("step_solve: steps must be taken in order 1..n");
    ConstrainedSpace space = space_at(*problem_.mesh, problem_.schedule, j, tr.tau);
    const ConstrainedSpace& prev = tr.spaces[tr.space_index[j - 1]];
    if (!std::includes(prev.tie_constraints.begin(), prev.tie_constraints.end(),
                       space.tie_constraints.begin(), space.tie_constraints.end()))
        throw SolveError(j, "constraint set grew between steps");
    if (!space.same_constraints(factored_)) refactor(space);
    if (!space.same_constraints(prev)) tr.spaces.push_back(space);
    tr.space_index[j] = static_cast<int>(tr.spaces.size()) - 1;
    const ConstrainedSpace& sp = tr.spaces[tr.space_index[j]];

    const Eigen::VectorXd r = full_rhs(j);
    const Eigen::VectorXd& zj = z_.z[j];
    const Eigen::VectorXd rhs = prolong_.transpose() * (r - full_ * zj);
    Eigen::VectorXd w;
    if (solver_->use_direct) {
        w = solver_->direct.solve(rhs);
    } else {
        Eigen::VectorXd guess(sp.num_free());
        const Eigen::VectorXd prev_u = tr.at(j - 1) - zj;
        for (int k = 0; k < sp.num_free(); ++k) guess[k] = prev_u[sp.free_dofs[k]];
        w = solver_->iterative.solveWithGuess(rhs, guess);
        if (solver_->iterative.info() != Eigen::Success)
            throw SolveError(j, "iterative solve did not converge");
    }
    if (!w.allFinite()) throw SolveError(j, "non-finite solution");
    tr.u[j + 1] = zj + prolong_ * w;
    tr.du[j] = (tr.at(j) - tr.at(j - 1)) / tr.tau;
    tr.d2u[j] = (tr.du[j] - tr.du[j - 1]) / tr.tau;
    const Eigen::VectorXd res = prolong_.transpose() * (full_ * tr.at(j) - r);
    const double rn = (prolong_.transpose() * r).norm();
    tr.residuals[j] = rn > 0.0 ? res.norm() / rn : res.norm();
    last_ = j;
    return tr.at(j);
}

DiscreteTrajectory StepContext::take_trajectory() { return std::move(trajectory_); }

void StepContext::adopt(const DiscreteTrajectory& traj) {
    if (traj.n != config_.n || traj.u.size() != trajectory_.u.size())
        throw PreconditionError("trajectory was computed on a different time grid");
    const int factorizations = trajectory_.factorizations;
    trajectory_ = traj;
    trajectory_.factorizations = factorizations;
    last_ = 0;
    while (last_ < config_.n && trajectory_.u[last_ + 2].size() > 0) ++last_;
    const ConstrainedSpace next =
        space_at(*problem_.mesh, problem_.schedule, std::min(last_ + 1, config_.n), trajectory_.tau);
    if (!next.same_constraints(factored_)) refactor(next);
}

std::unique_ptr<StepContext> init(const Problem& problem, const KernelSamples& samples,
                                  const SolverConfig& config) {
    return std::make_unique<StepContext>(problem, samples, config);
}

DiscreteTrajectory run(StepContext& ctx) {
    for (int j = ctx.last_step() + 1; j <= ctx.config().n; ++j) ctx.step_solve(j);
    return ctx.take_trajectory();
}

DiscreteTrajectory solve(const Problem& problem, const SolverConfig& config) {
    const KernelSamples samples = sample_grid(problem.kernel, config.n, problem.T);
    auto ctx = init(problem, samples, config);
    return run(*ctx);
}

double spd_certificate(const Problem& problem, const KernelSamples& samples,
                       const SolverConfig& config, std::uint64_t seed, int trials) {
    const CrackedMesh& mesh = *problem.mesh;
    const double tau = problem.T / config.n;
    const Operators ops = assemble_operators(mesh, problem.material, samples.visc, config.assembly);
    const SparseMatrix a = ops.mass / (tau * tau) + ops.elastic + samples.values[0] * ops.viscous;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = std::numeric_limits<double>::infinity();
    std::vector<ConstrainedSpace> seen;
    for (int j = 1; j <= config.n; ++j) {
        ConstrainedSpace s = space_at(mesh, problem.schedule, j, tau);
        if (!seen.empty() && seen.back().same_constraints(s)) continue;
        const SparseMatrix red = restrict_matrix(a, s);
        for (int t = 0; t < trials; ++t) {
            Eigen::VectorXd v(s.num_free());
            for (auto& x : v) x = gauss(rng);
            worst = std::min(worst, v.dot(red * v) / v.squaredNorm());
        }
        seen.push_back(std::move(s));
    }
    return worst;
}

double variational_residual(const Problem& problem, const KernelSamples& samples,
                            const DiscreteTrajectory& traj, std::uint64_t seed, int trials) {
    SolverConfig cfg;
    cfg.n = traj.n;
    StepContext c(problem, samples, cfg);
    const CrackedMesh& mesh = *problem.mesh;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0.0;
    c.adopt(traj);
    for (int j = 1; j <= traj.n; ++j) {
        const ConstrainedSpace s = space_at(mesh, problem.schedule, j, traj.tau);
        const SparseMatrix p = s.prolongation();
        const Eigen::VectorXd r = c.full_rhs(j);
        const Eigen::VectorXd res = p.transpose() * (c.full_matrix() * traj.at(j) - r);
        const double rn = std::max((p.transpose() * r).norm(), 1e-300);
        for (int t = 0; t < trials; ++t) {
            Eigen::VectorXd y(s.num_free());
            for (auto& x : y) x = gauss(rng);
            worst = std::max(worst, std::abs(y.dot(res)) / (y.norm() * rn));
        }
    }
    return worst;
}

double TestFunction::time_value(double t) const {
    if (t <= start || t >= start + width) return 0.0;
    const double s = std::sin(std::numbers::pi * (t - start) / width);
    return s * s;
}

std::vector<TestFunction> default_test_family(const Problem& problem, const DiscreteTrajectory& traj,
                                              int bumps, int max_nodes) {
    const ConstrainedSpace& s0 = traj.space(0);
    const SparseMatrix p = s0.prolongation();
    const int nfree = s0.num_free();
    const int count = std::min(nfree, max_nodes);
    std::vector<TestFunction> family;
    const double width = 2.0 * problem.T / (bumps + 1);
    for (int b = 0; b < bumps; ++b) {
        const double start = b * problem.T / (bumps + 1);
        for (int i = 0; i < count; ++i) {
            const int k = static_cast<int>((static_cast<long long>(i) * nfree) / count);
            Eigen::VectorXd e = Eigen::VectorXd::Zero(nfree);
            e[k] = 1.0;
            family.push_back({start, width, p * e});
        }
    }
    return family;
}

GeneralizedResidual check_generalized_residual(const Problem& problem,
                                               const DiscreteTrajectory& traj,
                                               const std::vector<TestFunction>& family) {
    const CrackedMesh& mesh = *problem.mesh;
    const int n = traj.n;
    const double tau = traj.tau;
    for (const auto& phi : family) {
        if (phi.shape.size() != mesh.ndof()) throw PreconditionError("test function has wrong size");
        for (int j = 0; j <= n; ++j) {
            const bool active = phi.time_value(j * tau) != 0.0 ||
                                (j > 0 && phi.time_value((j - 1) * tau) != 0.0) ||
                                (j < n && phi.time_value((j + 1) * tau) != 0.0);
            if (active && !traj.space(j).contains(phi.shape))
                throw PreconditionError("test function leaves the admissible space at step " +
                                        std::to_string(j));
        }
    }
    const KernelSamples samples = sample_grid(problem.kernel, n, problem.T);
    const Operators ops = assemble_operators(mesh, problem.material, samples.visc);
    std::vector<Eigen::VectorXd> loads(n + 1);
    for (int j = 1; j <= n; ++j)
        loads[j] = load_vector(problem.data, mesh, ops.mass, j, tau) +
                   neumann_vector(problem.data, mesh, ops.boundary, j, tau);

    GeneralizedResidual out;
    for (const auto& phi : family) {
        const Eigen::VectorXd m_phi = ops.mass * phi.shape;
        const Eigen::VectorXd c_phi = ops.elastic * phi.shape;
        const Eigen::VectorXd b_phi = ops.viscous * phi.shape;
        std::vector<double> mem(n + 1, 0.0);
        for (int k = 1; k <= n; ++k) mem[k] = (traj.at(k) - traj.at(0)).dot(b_phi);
        double r = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double bj = phi.time_value(j * tau);
            const double dbj = (bj - phi.time_value((j - 1) * tau)) / tau;
            if (bj == 0.0 && dbj == 0.0) continue;
            double conv = 0.0;
            for (int k = 1; k <= j; ++k) conv += tau * samples.values[j - k] * mem[k];
            r += tau * (-dbj * traj.du[j].dot(m_phi) + bj * traj.at(j).dot(c_phi) - dbj * conv -
                        bj * loads[j].dot(phi.shape));
        }
        out.values.push_back(r);
        out.max_abs = std::max(out.max_abs, std::abs(r));
    }
    return out;
}

} // namespace fkv
