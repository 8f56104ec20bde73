#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fkv {

// Symmetric operator on symmetric strains in Mandel coordinates
// (e11, e22, sqrt(2) e12) for d = 2 and the single shear strain for d = 1,
// so that the Frobenius product of strains is the Euclidean product.
using SymTensor = Eigen::MatrixXd;

int mandel_size(int dim);
SymTensor identity_tensor(int dim);
SymTensor scalar_tensor(int dim, double value);
SymTensor isotropic_tensor(double lambda, double mu);
double min_eigenvalue(const SymTensor& t);
bool is_symmetric(const SymTensor& t, double rel_tol = 1e-12);

double gamma_fn(double x);

// rho(t) = t^-alpha / Gamma(1 - alpha) and its first two derivatives and primitive.
double rho(double alpha, double t);
double rho_dot(double alpha, double t);
double rho_ddot(double alpha, double t);
double rho_primitive(double alpha, double t);

class FractionalKernel {
public:
    FractionalKernel(double alpha, SymTensor visc, double horizon = 1.0);

    double alpha() const { return alpha_; }
    const SymTensor& visc() const { return visc_; }
    double horizon() const { return horizon_; }

    double scalar(double t) const;
    SymTensor eval(double t) const;

private:
    double alpha_;
    SymTensor visc_;
    double horizon_;
};

// Scalar time profile with closed-form derivatives and primitive.
struct SmoothProfile {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
    std::function<double(double)> primitive;

    static SmoothProfile constant(double c);
    // a * exp(-t / beta)
    static SmoothProfile exponential(double a, double beta);
};

// G(t) = g(t + eps) * B, with g either rho or a smooth profile.
class RegularizedKernel {
public:
    static RegularizedKernel shifted(const FractionalKernel& base, double eps);
    static RegularizedKernel smooth(SmoothProfile profile, SymTensor visc, double eps = 0.0);

    bool fractional_base() const { return fractional_; }
    double alpha() const;
    double epsilon() const { return eps_; }
    const SymTensor& visc() const { return visc_; }
    const std::string& profile_name() const { return profile_.name; }

    RegularizedKernel with_epsilon(double eps) const;
    RegularizedKernel with_visc(SymTensor visc) const;

    double scalar(double t) const;
    double scalar_d1(double t) const;
    double scalar_d2(double t) const;
    // Integral of the scalar factor over [a, b], a, b >= 0.
    double scalar_integral(double a, double b) const;
    SymTensor eval(double t) const;

private:
    RegularizedKernel() = default;
    void check_time(double t) const;

    bool fractional_ = false;
    double alpha_ = 0.0;
    double eps_ = 0.0;
    SymTensor visc_;
    SmoothProfile profile_;
};

SymTensor kernel_eval(const FractionalKernel& k, double t);
SymTensor kernel_eval(const RegularizedKernel& k, double t);

// Scalar factors of G(j tau) with first and second difference quotients;
// the tensor part is visc.
struct KernelSamples {
    int n = 0;
    double tau = 0.0;
    std::vector<double> values;
    std::vector<double> first_diffs;
    std::vector<double> second_diffs;
    SymTensor visc;

    SymTensor value(int j) const { return values.at(j) * visc; }
    SymTensor first(int j) const { return first_diffs.at(j) * visc; }
    SymTensor second(int j) const { return second_diffs.at(j) * visc; }
};

KernelSamples sample_grid(const RegularizedKernel& k, int n, double T);

struct SignCertificate {
    bool ok = true;
    // Largest tau dG xi.xi over j >= 1 and smallest tau^2 d2G xi.xi over
    // j >= 2, normalised by |G(0)| |B| |xi|^2.
    double worst_first = 0.0;
    double worst_second = 0.0;
    int trials = 0;
};

SignCertificate certify_signs(const KernelSamples& s, std::uint64_t seed, int trials = 16,
                              double tol = 1e-12);

std::vector<double> caputo_eval(std::span<const double> g, double tau, double alpha);
std::vector<double> riemann_liouville_eval(std::span<const double> g, double tau, double alpha);

// Q_jk = tau^2 g(|j - k| tau) for the scalar factor g of k.
Eigen::MatrixXd kernel_positivity_matrix(const RegularizedKernel& k, int n, double tau);

} // namespace fkv
