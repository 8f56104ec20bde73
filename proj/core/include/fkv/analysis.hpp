#pragma once

#include "fkv/energy.hpp"
#include "fkv/kernel.hpp"
#include "fkv/stepper.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fkv {

struct SweepReport {
    int n = 0;
    std::vector<double> epsilons;        // eps0 2^-k
    std::vector<double> diff_linf_h;     // between levels k and k + 1
    std::vector<double> diff_l2_strain;
    std::vector<double> min_margins;     // per level, relative to the ledger scale
    std::vector<double> max_residuals;   // per level

    bool strictly_decreasing() const;
};

// Runs one level per epsilon on up to `workers` threads.
SweepReport epsilon_sweep(const Problem& problem, double eps0, int levels,
                          const SolverConfig& config, int workers = 1);

struct PositivityRow {
    int n = 0;
    double min_eigenvalue = 0.0;
    double norm = 0.0;
    bool pass = false;
};

struct IdentityCheck {
    int n_coarse = 0;
    double residual_coarse = 0.0;
    double residual_fine = 0.0;
    double ratio = 0.0;
};

struct PositivityReport {
    std::vector<PositivityRow> rows;
    IdentityCheck identity;
    bool pass = false;
};

// Residual of the three-term decomposition of
// int_0^t (d/dr int_0^r K(r-s) v(s) ds) v(r) dr on the n-step grid of [0, T].
double kernel_identity_residual(const std::function<double(double)>& k,
                                const std::function<double(double)>& k_dot,
                                const std::function<double(double)>& path, int n, double T);

// Smooth random path: sum of three random sinusoids.
std::function<double(double)> random_path(std::uint64_t seed);

IdentityCheck kernel_identity_check(const std::function<double(double)>& k,
                                    const std::function<double(double)>& k_dot, int n_coarse,
                                    double T, std::uint64_t seed);

PositivityReport positivity_test(const RegularizedKernel& kernel, int n_max, double T,
                                 std::uint64_t seed = 1);

struct UniquenessVariant {
    AssemblyOptions assembly;
    std::optional<double> linear_tol;
};

struct UniquenessReport {
    double max_diff = 0.0;
    double scale = 0.0;
    double relative = 0.0;
};

AssemblyOptions permuted_order(int num_elements, std::uint64_t seed);

UniquenessReport uniqueness_check(const Problem& problem, const SolverConfig& config,
                                  const UniquenessVariant& a, const UniquenessVariant& b);

enum class OracleCase { Wave, Static, Translation };

OracleCase parse_oracle_case(const std::string& name);
const char* oracle_case_name(OracleCase c);

struct ConvergenceReport {
    OracleCase oracle = OracleCase::Wave;
    std::vector<int> ns;
    std::vector<double> errors;
    std::vector<double> rates;  // log2(e_n / e_2n) between consecutive entries
};

Problem oracle_problem(OracleCase c);
ConvergenceReport manufactured_convergence(OracleCase c, const std::vector<int>& ns);

struct BoundStudy {
    std::vector<int> ns;
    std::vector<double> values;  // max_j |du^j|_H + |e u^j|_H
    double variation = 0.0;      // (max - min) / max
};

BoundStudy uniform_bound_study(const Problem& problem, const std::vector<int>& ns,
                               const SolverConfig& base = {});

// H-norm and strain norm helpers.
double h_norm(const Operators& ops, const Eigen::VectorXd& v);
double strain_norm(const Operators& ops, const Eigen::VectorXd& v);

} // namespace fkv
