#pragma once

#include "fkv/kernel.hpp"
#include "fkv/stepper.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fkv {

struct LedgerRow {
    int step = 0;
    double t = 0.0;
    double kinetic = 0.0;
    double elastic = 0.0;
    double memory = 0.0;
    // -1/2 sum_j tau dG^{i-j+1} |e(u^i - u^j)|^2
    double history_lag = 0.0;
    // -1/2 sum_j tau dG^j |e(u^j - u^0)|^2
    double history_origin = 0.0;
    // 1/2 sum_j sum_k tau^2 d2G^{j-k+1} |e(u^j - u^k)|^2
    double history_double = 0.0;
    double tau2_inertia = 0.0;
    double tau2_elastic = 0.0;
    double tau2_memory = 0.0;
    double tau2_history = 0.0;
    double work = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    // rhs - kinetic - elastic
    double margin_discrete = 0.0;
    // rhs - energy - dissipation
    double margin_energy = 0.0;

    double energy() const { return kinetic + elastic + memory + history_lag; }
    double dissipation() const { return history_origin + history_double; }
    double tau2_total() const { return tau2_inertia + tau2_elastic + tau2_memory + tau2_history; }
};

struct SignViolation {
    int step = 0;
    const char* term = "";
    double value = 0.0;
};

struct EnergyLedger {
    std::vector<LedgerRow> rows;  // steps 1..n
    double initial_energy = 0.0;
    double scale = 0.0;

    double max_relative_residual() const;
    double min_relative_margin() const;
    std::vector<SignViolation> sign_violations(double rel_tol = 1e-12) const;
};

EnergyLedger discrete_energy_audit(const DiscreteTrajectory& traj, const KernelSamples& samples,
                                   const Problem& problem);

enum class WorkForm { Direct, Convolution };

// Work of loads and boundary motion at t_i, i = 0..n, by quadrature on the
// scheme's grid with the piecewise interpolants of the trajectory.
std::vector<double> total_work_series(const DiscreteTrajectory& traj, const Problem& problem,
                                      const RegularizedKernel& kernel, WorkForm form);
double total_work(const DiscreteTrajectory& traj, const Problem& problem, int i,
                  WorkForm form = WorkForm::Direct);

struct ContinuousEnergy {
    double energy = 0.0;
    double dissipation = 0.0;
    double work = 0.0;
    double initial_energy = 0.0;
    double margin = 0.0;
};

std::vector<ContinuousEnergy> continuous_energy_series(const DiscreteTrajectory& traj,
                                                       const Problem& problem,
                                                       const RegularizedKernel& kernel);
ContinuousEnergy continuous_energy(const DiscreteTrajectory& traj, const Problem& problem,
                                   const RegularizedKernel& kernel, int t_index);

struct InitialContinuity {
    double displacement = 0.0;
    double velocity = 0.0;
    // Largest deviation / t over the window.
    double displacement_rate = 0.0;
    double velocity_rate = 0.0;
};

InitialContinuity initial_continuity_check(const DiscreteTrajectory& traj, const Problem& problem,
                                           int window_steps = 10);

// <a(t_i), v> = (velocity, v)_H + int_0^t (G(t - r)(e u(r) - e u0), e v)_H dr
// for each column v of panel; rows i = 0..n.
Eigen::MatrixXd alpha_diagnostic(const DiscreteTrajectory& traj, const Problem& problem,
                                 const Eigen::MatrixXd& panel);

// sum_j tau |d2u^j|^2 in the dual norm of the initial admissible space.
double second_derivative_dual_bound(const DiscreteTrajectory& traj, const Problem& problem);

} // namespace fkv
