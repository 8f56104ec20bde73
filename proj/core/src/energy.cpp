#include "fkv/energy.hpp"

#include "fkv/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace fkv {

namespace {

void check_grid(const DiscreteTrajectory& traj, const KernelSamples& samples) {
    if (samples.n != traj.n || std::abs(samples.tau - traj.tau) > 1e-14 * traj.tau)
        throw PreconditionError("kernel samples and trajectory use different time grids");
}

double quad(const SparseMatrix& a, const Eigen::VectorXd& v) { return v.dot(a * v); }

} // namespace

double EnergyLedger::max_relative_residual() const {
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, std::abs(r.residual) / scale);
    return worst;
}

double EnergyLedger::min_relative_margin() const {
    double worst = rows.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (const auto& r : rows)
        worst = std::min({worst, r.margin_discrete / scale, r.margin_energy / scale});
    return worst;
}

std::vector<SignViolation> EnergyLedger::sign_violations(double rel_tol) const {
    std::vector<SignViolation> out;
    const double floor = -rel_tol * scale;
    for (const auto& r : rows) {
        const std::pair<const char*, double> terms[] = {
            {"kinetic", r.kinetic},           {"elastic", r.elastic},
            {"memory", r.memory},             {"history_lag", r.history_lag},
            {"history_origin", r.history_origin}, {"history_double", r.history_double},
            {"tau2_inertia", r.tau2_inertia}, {"tau2_elastic", r.tau2_elastic},
            {"tau2_memory", r.tau2_memory},   {"tau2_history", r.tau2_history}};
        for (const auto& [name, value] : terms)
            if (value < floor) out.push_back({r.step, name, value});
    }
    return out;
}

EnergyLedger discrete_energy_audit(const DiscreteTrajectory& traj, const KernelSamples& samples,
                                   const Problem& problem) {
    check_grid(traj, samples);
    const CrackedMesh& mesh = *problem.mesh;
    const int n = traj.n;
    const double tau = traj.tau;
    const Operators ops = assemble_operators(mesh, problem.material, samples.visc);
    const DirichletSamples z = dirichlet_samples(problem.data, mesh, n, problem.T);
    const auto& g = samples.values;
    const auto& dg = samples.first_diffs;
    const auto& d2g = samples.second_diffs;
    const bool memory = samples.visc.norm() > 0.0;

    std::vector<Eigen::VectorXd> bu(n + 1);  // K_B u^j
    if (memory)
        for (int j = 0; j <= n; ++j) bu[j] = ops.viscous * traj.at(j);
    // |e(u^j - u^k)|^2 weighted by the viscous tensor.
    auto pair_q = [&](int j, int k) { return (traj.at(j) - traj.at(k)).dot(bu[j] - bu[k]); };

    EnergyLedger ledger;
    const Eigen::VectorXd& u0 = traj.at(0);
    const Eigen::VectorXd& u1 = traj.du[0];
    ledger.initial_energy = 0.5 * quad(ops.mass, u1) + 0.5 * quad(ops.elastic, u0);

    double origin = 0.0, dbl = 0.0, t2i = 0.0, t2e = 0.0, t2m = 0.0, t2h = 0.0, work = 0.0;
    for (int i = 1; i <= n; ++i) {
        LedgerRow row;
        row.step = i;
        row.t = i * tau;
        const Eigen::VectorXd& ui = traj.at(i);
        const Eigen::VectorXd& dui = traj.du[i];
        row.kinetic = 0.5 * quad(ops.mass, dui);
        row.elastic = 0.5 * quad(ops.elastic, ui);
        if (memory) {
            const double qi = pair_q(i, 0);
            row.memory = 0.5 * g[i] * qi;
            double lag = 0.0, inc = 0.0;
            for (int j = 1; j <= i; ++j) {
                const double q = pair_q(i, j);
                lag += tau * dg[i - j + 1] * q;
                inc += tau * tau * d2g[i - j + 1] * q;
            }
            row.history_lag = -0.5 * lag;
            origin += -0.5 * tau * dg[i] * qi;
            dbl += 0.5 * inc;
            const double qd = quad(ops.viscous, dui);
            t2m += 0.5 * tau * tau * g[i - 1] * qd;
            double sdg = 0.0;
            for (int k = 1; k <= i; ++k) sdg += tau * dg[i - k];
            t2h += -0.5 * tau * tau * sdg * qd;
        }
        row.history_origin = origin;
        row.history_double = dbl;
        t2i += 0.5 * tau * tau * quad(ops.mass, traj.d2u[i]);
        t2e += 0.5 * tau * tau * quad(ops.elastic, dui);
        row.tau2_inertia = t2i;
        row.tau2_elastic = t2e;
        row.tau2_memory = t2m;
        row.tau2_history = t2h;

        const Eigen::VectorXd load = load_vector(problem.data, mesh, ops.mass, i, tau) +
                                     neumann_vector(problem.data, mesh, ops.boundary, i, tau);
        const Eigen::VectorXd& dzi = z.dz[i];
        double li = load.dot(dui - dzi);
        if (dzi.squaredNorm() > 0.0) {
            li += traj.d2u[i].dot(ops.mass * dzi) + ui.dot(ops.elastic * dzi);
            if (memory) {
                const Eigen::VectorXd bz = ops.viscous * dzi;
                li += g[i - 1] * (ui - u0).dot(bz);
                const double wi = ui.dot(bz);
                for (int k = 1; k <= i; ++k) li += tau * dg[i - k] * (traj.at(k).dot(bz) - wi);
            }
        }
        work += tau * li;
        row.work = work;

        row.lhs = row.energy() + row.dissipation() + row.tau2_total();
        row.rhs = ledger.initial_energy + work;
        row.residual = row.lhs - row.rhs;
        row.margin_discrete = row.rhs - row.kinetic - row.elastic;
        row.margin_energy = row.rhs - row.energy() - row.dissipation();
        ledger.rows.push_back(row);
    }
    double wmax = 0.0;
    for (const auto& r : ledger.rows) wmax = std::max(wmax, std::abs(r.work));
    ledger.scale = ledger.initial_energy + wmax + 1e-14;
    return ledger;
}

namespace {

constexpr double gl_x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                            0.9602898564975363};
constexpr double gl_w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                            0.1012285362903763};

template <class F>
double gauss8(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int q = 0; q < 4; ++q) s += gl_w[q] * (f(mid - half * gl_x[q]) + f(mid + half * gl_x[q]));
    return half * s;
}

// Composite Gauss rule on [a, b], refined geometrically towards a when the
// integrand's singularity sits at distance d to the left of a.
template <class F>
double graded(F&& f, double a, double b, double d) {
    double total = 0.0;
    double hi = b;
    while (hi - a > 0.5 * d && hi - a > 1e-14 * (b - a + d)) {
        const double lo = a + 0.5 * (hi - a);
        total += gauss8(f, lo, hi);
        hi = lo;
    }
    return total + gauss8(f, a, hi);
}

} // namespace

std::vector<ContinuousEnergy> continuous_energy_series(const DiscreteTrajectory& traj,
                                                       const Problem& problem,
                                                       const RegularizedKernel& kernel) {
    if (kernel.fractional_base() && !(kernel.epsilon() > 0.0))
        throw PreconditionError("continuous energy needs a regularized kernel");
    const CrackedMesh& mesh = *problem.mesh;
    const int n = traj.n;
    const double tau = traj.tau;
    const double eps = kernel.epsilon();
    const Operators ops = assemble_operators(mesh, problem.material, kernel.visc());
    const bool memory = kernel.visc().norm() > 0.0;

    // Exact cell integrals of the derivatives, evaluated from closed forms.
    std::vector<double> v(n + 1, 0.0), w(n + 1, 0.0);
    if (memory) {
        auto d1 = [&](double s) { return kernel.scalar_d1(s); };
        auto d2 = [&](double s) { return kernel.scalar_d2(s); };
        for (int m = 1; m <= n; ++m) {
            const double lo = (m - 1) * tau, mid = m * tau, hi = (m + 1) * tau;
            v[m] = graded(d1, lo, mid, lo + eps);
            w[m] = graded([&](double s) { return d2(s) * (s - lo); }, lo, mid, lo + eps) +
                   graded([&](double s) { return d2(s) * (hi - s); }, mid, hi, mid + eps);
        }
    }

    std::vector<Eigen::VectorXd> bu(n + 1);
    if (memory)
        for (int j = 0; j <= n; ++j) bu[j] = ops.viscous * traj.at(j);
    auto pair_q = [&](int j, int k) { return (traj.at(j) - traj.at(k)).dot(bu[j] - bu[k]); };

    const std::vector<double> work = total_work_series(traj, problem, kernel, WorkForm::Convolution);
    const double e0 =
        0.5 * quad(ops.mass, traj.du[0]) + 0.5 * quad(ops.elastic, traj.at(0));

    std::vector<ContinuousEnergy> out(n + 1);
    double diss = 0.0;
    for (int i = 0; i <= n; ++i) {
        ContinuousEnergy& c = out[i];
        c.initial_energy = e0;
        c.work = work[i];
        c.energy = 0.5 * quad(ops.mass, traj.du[i]) + 0.5 * quad(ops.elastic, traj.at(i));
        if (memory && i > 0) {
            c.energy += 0.5 * kernel.scalar(i * tau) * pair_q(i, 0);
            double lag = 0.0;
            for (int j = 1; j <= i; ++j) lag += v[i - j + 1] * pair_q(i, j);
            c.energy -= 0.5 * lag;
            double inc = 0.0;
            for (int k = 1; k < i; ++k) inc += w[i - k] * pair_q(i, k);
            diss += -0.5 * v[i] * pair_q(i, 0) + 0.5 * inc;
        }
        c.dissipation = diss;
        c.margin = c.work + e0 - c.energy - c.dissipation;
    }
    return out;
}

ContinuousEnergy continuous_energy(const DiscreteTrajectory& traj, const Problem& problem,
                                   const RegularizedKernel& kernel, int t_index) {
    if (t_index < 0 || t_index > traj.n) throw DomainError("continuous_energy: index out of range");
    return continuous_energy_series(traj, problem, kernel)[t_index];
}

InitialContinuity initial_continuity_check(const DiscreteTrajectory& traj, const Problem& problem,
                                           int window_steps) {
    const SparseMatrix m = mass_matrix(*problem.mesh);
    const int w = std::min(window_steps, traj.n);
    InitialContinuity out;
    for (int j = 1; j <= w; ++j) {
        const double t = j * traj.tau;
        const double du = std::sqrt(std::max(0.0, quad(m, traj.at(j) - traj.at(0))));
        const double dv = std::sqrt(std::max(0.0, quad(m, traj.du[j] - traj.du[0])));
        out.displacement = std::max(out.displacement, du);
        out.velocity = std::max(out.velocity, dv);
        out.displacement_rate = std::max(out.displacement_rate, du / t);
        out.velocity_rate = std::max(out.velocity_rate, dv / t);
    }
    return out;
}

Eigen::MatrixXd alpha_diagnostic(const DiscreteTrajectory& traj, const Problem& problem,
                                 const Eigen::MatrixXd& panel) {
    const CrackedMesh& mesh = *problem.mesh;
    if (panel.rows() != mesh.ndof()) throw PreconditionError("panel has the wrong number of rows");
    const KernelSamples samples = sample_grid(problem.kernel, traj.n, problem.T);
    const Operators ops = assemble_operators(mesh, problem.material, samples.visc);
    const Eigen::MatrixXd mv = ops.mass * panel;
    const Eigen::MatrixXd bv = ops.viscous * panel;
    Eigen::MatrixXd hist(traj.n + 1, panel.cols());
    for (int k = 0; k <= traj.n; ++k) hist.row(k) = (traj.at(k) - traj.at(0)).transpose() * bv;
    Eigen::MatrixXd out(traj.n + 1, panel.cols());
    for (int i = 0; i <= traj.n; ++i) {
        Eigen::RowVectorXd row = traj.du[i].transpose() * mv;
        for (int k = 1; k <= i; ++k) row += traj.tau * samples.values[i - k] * hist.row(k);
        out.row(i) = row;
    }
    return out;
}

double second_derivative_dual_bound(const DiscreteTrajectory& traj, const Problem& problem) {
    const CrackedMesh& mesh = *problem.mesh;
    const ConstrainedSpace& s0 = traj.space(0);
    const SparseMatrix m = mass_matrix(mesh);
    const SparseMatrix k = stiffness_matrix(mesh, identity_tensor(mesh.dim));
    const SparseMatrix a = restrict_matrix(m + k, s0);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw SolveError(0, "norm matrix factorization failed");
    const SparseMatrix p = s0.prolongation();
    double total = 0.0;
    for (int j = 1; j <= traj.n; ++j) {
        const Eigen::VectorXd r = p.transpose() * (m * traj.d2u[j]);
        total += traj.tau * r.dot(ldlt.solve(r));
    }
    return total;
}

} // namespace fkv
