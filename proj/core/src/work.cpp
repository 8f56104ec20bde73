#include "fkv/energy.hpp"

#include "fkv/errors.hpp"

#include <array>
#include <cmath>

namespace fkv {

namespace {

const std::array<double, 3> gx = {-0.7745966692414834, 0.0, 0.7745966692414834};
const std::array<double, 3> gw = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

} // namespace

std::vector<double> total_work_series(const DiscreteTrajectory& traj, const Problem& problem,
                                      const RegularizedKernel& kernel, WorkForm form) {
    const CrackedMesh& mesh = *problem.mesh;
    const ProblemData& data = problem.data;
    const int n = traj.n;
    const double tau = traj.tau;
    const Operators ops = assemble_operators(mesh, problem.material, kernel.visc());
    const bool moving = !data.z.is_zero();
    const bool memory = moving && kernel.visc().norm() > 0.0;

    auto node_at = [&](const SpaceTimeField& f, double t, int d) { return f.nodal(mesh, t, d); };
    auto cell_points = [&](int j, int q) { return (j - 0.5) * tau + 0.5 * tau * gx[q]; };
    // Integral of the kernel's scalar factor over [0, x].
    auto prim = [&](double x) { return kernel.scalar_integral(0.0, x); };

    std::vector<Eigen::VectorXd> delta(n + 1);
    for (int k = 0; k <= n; ++k) delta[k] = traj.at(k) - traj.at(0);

    const Eigen::VectorXd& u0 = traj.at(0);
    const Eigen::VectorXd& u1 = traj.du[0];
    const Eigen::VectorXd n0 = node_at(data.N, 0.0, 0);
    const Eigen::VectorXd z0 = node_at(data.z, 0.0, 0);
    const Eigen::VectorXd zd0 = node_at(data.z, 0.0, 1);
    const double p0 = n0.dot(ops.boundary * (u0 - z0)) + u1.dot(ops.mass * zd0);

    std::vector<double> out(n + 1, 0.0);
    double cumulative = 0.0;
    for (int j = 1; j <= n; ++j) {
        const Eigen::VectorXd& uj = traj.at(j);
        // (f, u' - z'): u' is the slope of the affine interpolant on the cell.
        double cell = tau * load_vector(data, mesh, ops.mass, j, tau).dot(traj.du[j]);
        // -(N', u - z)_N with the left value of u.
        if (!data.N.is_zero())
            cell -= tau * time_average(data.N, mesh, j, tau, 1).dot(ops.boundary * traj.at(j - 1));
        if (moving) {
            double fz = 0.0, nz = 0.0;
            for (int q = 0; q < 3; ++q) {
                const double r = cell_points(j, q);
                const Eigen::VectorXd zr = node_at(data.z, r, 0);
                const Eigen::VectorXd zdr = node_at(data.z, r, 1);
                if (!data.f.is_zero()) fz += gw[q] * node_at(data.f, r, 0).dot(ops.mass * zdr);
                if (!data.N.is_zero()) nz += gw[q] * node_at(data.N, r, 1).dot(ops.boundary * zr);
            }
            cell += 0.5 * tau * (nz - fz);
            // -(u', z'') with the left velocity, and (C e u, e z') with the right value.
            cell -= tau * traj.du[j - 1].dot(ops.mass * time_average(data.z, mesh, j, tau, 2));
            cell += tau * uj.dot(ops.elastic * time_average(data.z, mesh, j, tau, 1));
        }
        if (memory && form == WorkForm::Direct) {
            for (int q = 0; q < 3; ++q) {
                const double r = cell_points(j, q);
                const Eigen::VectorXd y = ops.viscous * node_at(data.z, r, 1);
                const double yj = uj.dot(y);
                double s = kernel.scalar(r) * delta[j].dot(y);
                for (int k = 1; k < j; ++k) {
                    const double c = kernel.scalar(r - (k - 1) * tau) - kernel.scalar(r - k * tau);
                    s += c * (traj.at(k).dot(y) - yj);
                }
                cell += 0.5 * tau * gw[q] * s;
            }
        }
        if (memory && form == WorkForm::Convolution) {
            for (int q = 0; q < 3; ++q) {
                const double r = cell_points(j, q);
                const Eigen::VectorXd y = ops.viscous * node_at(data.z, r, 2);
                double s = (prim(r - (j - 1) * tau) - prim(0.0)) * delta[j].dot(y);
                for (int k = 1; k < j; ++k)
                    s += (prim(r - (k - 1) * tau) - prim(r - k * tau)) * delta[k].dot(y);
                cell -= 0.5 * tau * gw[q] * s;
            }
        }
        cumulative += cell;

        const double t = j * tau;
        double point = -p0;
        if (!data.N.is_zero())
            point += node_at(data.N, t, 0).dot(ops.boundary * (uj - node_at(data.z, t, 0)));
        if (moving) point += traj.du[j].dot(ops.mass * node_at(data.z, t, 1));
        if (memory && form == WorkForm::Convolution) {
            const Eigen::VectorXd y = ops.viscous * node_at(data.z, t, 1);
            for (int k = 1; k <= j; ++k)
                point += (prim(t - (k - 1) * tau) - prim(t - k * tau)) * delta[k].dot(y);
        }
        out[j] = cumulative + point;
    }
    return out;
}

double total_work(const DiscreteTrajectory& traj, const Problem& problem, int i, WorkForm form) {
    if (i < 0 || i > traj.n) throw DomainError("total_work: index out of range");
    return total_work_series(traj, problem, problem.kernel, form)[i];
}

} // namespace fkv
