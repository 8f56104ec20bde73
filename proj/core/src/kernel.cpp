#include "fkv/kernel.hpp"

#include "fkv/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

namespace fkv {

int mandel_size(int dim) {
    if (dim == 1) return 1;
    if (dim == 2) return 3;
    throw DomainError("unsupported dimension " + std::to_string(dim));
}

SymTensor identity_tensor(int dim) {
    const int m = mandel_size(dim);
    return SymTensor::Identity(m, m);
}

SymTensor scalar_tensor(int dim, double value) { return value * identity_tensor(dim); }

SymTensor isotropic_tensor(double lambda, double mu) {
    SymTensor c(3, 3);
    c << lambda + 2 * mu, lambda, 0,
         lambda, lambda + 2 * mu, 0,
         0, 0, 2 * mu;
    return c;
}

double min_eigenvalue(const SymTensor& t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool is_symmetric(const SymTensor& t, double rel_tol) {
    if (t.rows() != t.cols()) return false;
    const double scale = std::max(t.norm(), std::numeric_limits<double>::min());
    return (t - t.transpose()).norm() <= rel_tol * scale;
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

void check_positive_time(double t) {
    if (!(t > 0.0)) throw SingularityError("fractional kernel is singular at t <= 0");
}

void check_visc(const SymTensor& b) {
    if (b.rows() != 1 && b.rows() != 3) throw ValidationError("viscous tensor must be 1x1 or 3x3");
    if (!is_symmetric(b)) throw ValidationError("viscous tensor is not symmetric");
    if (min_eigenvalue(b) < -1e-12 * std::max(1.0, b.norm()))
        throw ValidationError("viscous tensor is not nonnegative");
}

} // namespace

double rho(double alpha, double t) {
    check_alpha(alpha);
    check_positive_time(t);
    return std::pow(t, -alpha) / gamma_fn(1.0 - alpha);
}

double rho_dot(double alpha, double t) {
    check_alpha(alpha);
    check_positive_time(t);
    return -alpha * std::pow(t, -alpha - 1.0) / gamma_fn(1.0 - alpha);
}

double rho_ddot(double alpha, double t) {
    check_alpha(alpha);
    check_positive_time(t);
    return alpha * (alpha + 1.0) * std::pow(t, -alpha - 2.0) / gamma_fn(1.0 - alpha);
}

double rho_primitive(double alpha, double t) {
    check_alpha(alpha);
    if (t < 0.0) throw DomainError("rho_primitive: negative time");
    return std::pow(t, 1.0 - alpha) / gamma_fn(2.0 - alpha);
}

FractionalKernel::FractionalKernel(double alpha, SymTensor visc, double horizon)
    : alpha_(alpha), visc_(std::move(visc)), horizon_(horizon) {
    check_alpha(alpha_);
    check_visc(visc_);
    if (!(horizon_ > 0.0)) throw DomainError("kernel horizon must be positive");
}

double FractionalKernel::scalar(double t) const { return rho(alpha_, t); }

SymTensor FractionalKernel::eval(double t) const { return scalar(t) * visc_; }

SmoothProfile SmoothProfile::constant(double c) {
    if (!(c >= 0.0)) throw ValidationError("constant kernel value must be nonnegative");
    return {"constant",
            [c](double) { return c; },
            [](double) { return 0.0; },
            [](double) { return 0.0; },
            [c](double t) { return c * t; }};
}

SmoothProfile SmoothProfile::exponential(double a, double beta) {
    if (!(a >= 0.0)) throw ValidationError("exponential kernel amplitude must be nonnegative");
    if (!(beta > 0.0)) throw ValidationError("exponential kernel time constant must be positive");
    return {"exponential",
            [a, beta](double t) { return a * std::exp(-t / beta); },
            [a, beta](double t) { return -a / beta * std::exp(-t / beta); },
            [a, beta](double t) { return a / (beta * beta) * std::exp(-t / beta); },
            [a, beta](double t) { return -a * beta * std::exp(-t / beta); }};
}

RegularizedKernel RegularizedKernel::shifted(const FractionalKernel& base, double eps) {
    if (!(eps > 0.0)) throw DomainError("a fractional kernel needs a positive shift epsilon");
    RegularizedKernel k;
    k.fractional_ = true;
    k.alpha_ = base.alpha();
    k.eps_ = eps;
    k.visc_ = base.visc();
    const double alpha = base.alpha();
    k.profile_ = {"fractional",
                  [alpha](double t) { return rho(alpha, t); },
                  [alpha](double t) { return rho_dot(alpha, t); },
                  [alpha](double t) { return rho_ddot(alpha, t); },
                  [alpha](double t) { return rho_primitive(alpha, t); }};
    return k;
}

RegularizedKernel RegularizedKernel::smooth(SmoothProfile profile, SymTensor visc, double eps) {
    if (!(eps >= 0.0)) throw DomainError("kernel shift epsilon must be nonnegative");
    if (!profile.value || !profile.d1 || !profile.d2 || !profile.primitive)
        throw ValidationError("smooth kernel profile is incomplete");
    check_visc(visc);
    RegularizedKernel k;
    k.eps_ = eps;
    k.visc_ = std::move(visc);
    k.profile_ = std::move(profile);
    return k;
}

double RegularizedKernel::alpha() const {
    if (!fractional_) throw PreconditionError("kernel has no fractional exponent");
    return alpha_;
}

RegularizedKernel RegularizedKernel::with_epsilon(double eps) const {
    if (fractional_ && !(eps > 0.0))
        throw DomainError("a fractional kernel needs a positive shift epsilon");
    if (!(eps >= 0.0)) throw DomainError("kernel shift epsilon must be nonnegative");
    RegularizedKernel k = *this;
    k.eps_ = eps;
    return k;
}

RegularizedKernel RegularizedKernel::with_visc(SymTensor visc) const {
    check_visc(visc);
    RegularizedKernel k = *this;
    k.visc_ = std::move(visc);
    return k;
}

void RegularizedKernel::check_time(double t) const {
    if (!(t >= 0.0)) throw DomainError("regularized kernel evaluated at negative time");
}

double RegularizedKernel::scalar(double t) const {
    check_time(t);
    return profile_.value(t + eps_);
}

double RegularizedKernel::scalar_d1(double t) const {
    check_time(t);
    return profile_.d1(t + eps_);
}

double RegularizedKernel::scalar_d2(double t) const {
    check_time(t);
    return profile_.d2(t + eps_);
}

double RegularizedKernel::scalar_integral(double a, double b) const {
    check_time(a);
    check_time(b);
    return profile_.primitive(b + eps_) - profile_.primitive(a + eps_);
}

SymTensor RegularizedKernel::eval(double t) const { return scalar(t) * visc_; }

SymTensor kernel_eval(const FractionalKernel& k, double t) { return k.eval(t); }
SymTensor kernel_eval(const RegularizedKernel& k, double t) { return k.eval(t); }

KernelSamples sample_grid(const RegularizedKernel& k, int n, double T) {
    if (n < 1) throw DomainError("sample_grid: n must be at least 1");
    if (!(T > 0.0)) throw DomainError("sample_grid: T must be positive");
    KernelSamples s;
    s.n = n;
    s.tau = T / n;
    s.visc = k.visc();
    s.values.resize(n + 1);
    s.first_diffs.assign(n + 1, 0.0);
    s.second_diffs.assign(n + 1, 0.0);
    for (int j = 0; j <= n; ++j) s.values[j] = k.scalar(j * s.tau);
    for (int j = 1; j <= n; ++j) s.first_diffs[j] = (s.values[j] - s.values[j - 1]) / s.tau;
    for (int j = 1; j <= n; ++j)
        s.second_diffs[j] = (s.first_diffs[j] - s.first_diffs[j - 1]) / s.tau;
    return s;
}

SignCertificate certify_signs(const KernelSamples& s, std::uint64_t seed, int trials, double tol) {
    SignCertificate cert;
    cert.trials = trials;
    const int m = static_cast<int>(s.visc.rows());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double g0 = s.values.empty() ? 0.0 : std::abs(s.values[0]);
    const double bnorm = s.visc.norm();
    double worst_first = -std::numeric_limits<double>::infinity();
    double worst_second = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < trials; ++trial) {
        Eigen::VectorXd xi(m);
        for (int i = 0; i < m; ++i) xi[i] = gauss(rng);
        const double scale = std::max(g0 * bnorm * xi.squaredNorm(), 1e-300);
        const double q = xi.dot(s.visc * xi);
        for (int j = 1; j <= s.n; ++j) {
            worst_first = std::max(worst_first, s.tau * s.first_diffs[j] * q / scale);
            if (j >= 2)
                worst_second =
                    std::min(worst_second, s.tau * s.tau * s.second_diffs[j] * q / scale);
        }
    }
    if (s.n < 1) worst_first = 0.0;
    if (s.n < 2) worst_second = 0.0;
    cert.worst_first = worst_first;
    cert.worst_second = worst_second;
    cert.ok = worst_first <= tol && worst_second >= -tol;
    return cert;
}

namespace {

void check_path(std::span<const double> g, double tau, double alpha) {
    if (g.size() < 2) throw DomainError("fractional derivative needs at least two samples");
    if (!(tau > 0.0)) throw DomainError("grid step must be positive");
    check_alpha(alpha);
}

} // namespace

std::vector<double> caputo_eval(std::span<const double> g, double tau, double alpha) {
    check_path(g, tau, alpha);
    const int n = static_cast<int>(g.size()) - 1;
    const double beta = 1.0 - alpha;
    std::vector<double> a(n);
    for (int l = 0; l < n; ++l) a[l] = std::pow(l + 1.0, beta) - std::pow(double(l), beta);
    std::vector<double> dg(n + 1, 0.0);
    for (int k = 1; k <= n; ++k) dg[k] = g[k] - g[k - 1];
    const double c = std::pow(tau, -alpha) / gamma_fn(2.0 - alpha);
    std::vector<double> out(n + 1, 0.0);
    for (int m = 1; m <= n; ++m) {
        double acc = 0.0;
        for (int k = 1; k <= m; ++k) acc += dg[k] * a[m - k];
        out[m] = c * acc;
    }
    return out;
}

std::vector<double> riemann_liouville_eval(std::span<const double> g, double tau, double alpha) {
    check_path(g, tau, alpha);
    const int n = static_cast<int>(g.size()) - 1;
    const double b1 = 1.0 - alpha;
    const double b2 = 2.0 - alpha;
    // Exact weights of (m tau - r)^-alpha against the constant and linear
    // parts of g on the cell ((k-1) tau, k tau), with l = m - k.
    std::vector<double> wa(n), wb(n);
    for (int l = 0; l < n; ++l) {
        const double lo = l, hi = l + 1.0;
        wa[l] = (std::pow(hi, b1) - std::pow(lo, b1)) / b1;
        wb[l] = hi * wa[l] - (std::pow(hi, b2) - std::pow(lo, b2)) / b2;
    }
    std::vector<double> conv(n + 1, 0.0);
    const double c = std::pow(tau, b1) / gamma_fn(b1);
    for (int m = 1; m <= n; ++m) {
        double acc = 0.0;
        for (int k = 1; k <= m; ++k) acc += g[k - 1] * wa[m - k] + (g[k] - g[k - 1]) * wb[m - k];
        conv[m] = c * acc;
    }
    std::vector<double> out(n + 1, 0.0);
    if (g[0] != 0.0) out[0] = std::copysign(std::numeric_limits<double>::infinity(), g[0]);
    if (n == 1) {
        out[1] = (conv[1] - conv[0]) / tau;
        return out;
    }
    for (int m = 1; m < n; ++m) out[m] = (conv[m + 1] - conv[m - 1]) / (2.0 * tau);
    out[n] = (3.0 * conv[n] - 4.0 * conv[n - 1] + conv[n - 2]) / (2.0 * tau);
    return out;
}

Eigen::MatrixXd kernel_positivity_matrix(const RegularizedKernel& k, int n, double tau) {
    if (n < 1) throw DomainError("positivity matrix needs n >= 1");
    std::vector<double> g(n);
    for (int l = 0; l < n; ++l) g[l] = k.scalar(l * tau);
    Eigen::MatrixXd q(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) q(i, j) = tau * tau * g[std::abs(i - j)];
    return q;
}

} // namespace fkv
