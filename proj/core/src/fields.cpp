#include "fkv/assembly.hpp"
#include "fkv/errors.hpp"

#include <array>
#include <cmath>

namespace fkv {

double TimeFactor::value(double t) const {
    switch (kind) {
    case Kind::Constant: return 1.0;
    case Kind::Power: return a == 0.0 ? 1.0 : std::pow(t, a);
    case Kind::Sine: return std::sin(a * t + b);
    case Kind::Exponential: return std::exp(a * t);
    }
    return 0.0;
}

double TimeFactor::d1(double t) const {
    switch (kind) {
    case Kind::Constant: return 0.0;
    case Kind::Power:
        if (a == 0.0) return 0.0;
        if (a == 1.0) return 1.0;
        return a * std::pow(t, a - 1.0);
    case Kind::Sine: return a * std::cos(a * t + b);
    case Kind::Exponential: return a * std::exp(a * t);
    }
    return 0.0;
}

double TimeFactor::d2(double t) const {
    switch (kind) {
    case Kind::Constant: return 0.0;
    case Kind::Power:
        if (a == 0.0 || a == 1.0) return 0.0;
        if (a == 2.0) return 2.0;
        return a * (a - 1.0) * std::pow(t, a - 2.0);
    case Kind::Sine: return -a * a * std::sin(a * t + b);
    case Kind::Exponential: return a * a * std::exp(a * t);
    }
    return 0.0;
}

double SpaceFactor::value(const Eigen::Vector2d& x, int dim) const {
    switch (kind) {
    case Kind::Constant: return 1.0;
    case Kind::Monomial: {
        double v = k[0] == 0.0 ? 1.0 : std::pow(x[0], k[0]);
        if (dim == 2 && k[1] != 0.0) v *= std::pow(x[1], k[1]);
        return v;
    }
    case Kind::Trig: {
        double v = std::sin(k[0] * x[0] + phase[0]);
        if (dim == 2) v *= std::sin(k[1] * x[1] + phase[1]);
        return v;
    }
    }
    return 0.0;
}

SpaceTimeField SpaceTimeField::zero(int components) {
    SpaceTimeField f;
    f.components_ = components;
    return f;
}

SpaceTimeField SpaceTimeField::from_terms(int components, std::vector<SeparableTerm> terms) {
    SpaceTimeField f;
    f.components_ = components;
    for (const auto& term : terms)
        if (term.amplitude.size() != components)
            throw ValidationError("field term amplitude has the wrong number of components");
    f.zero_ = terms.empty();
    f.terms_ = std::move(terms);
    return f;
}

SpaceTimeField SpaceTimeField::from_functions(int components, Fn value, Fn dt, Fn dtt) {
    if (!value) throw ValidationError("field needs a value function");
    SpaceTimeField f;
    f.components_ = components;
    f.zero_ = false;
    f.value_ = std::move(value);
    f.dt_ = std::move(dt);
    f.dtt_ = std::move(dtt);
    return f;
}

namespace {

Eigen::VectorXd eval_terms(const std::vector<SeparableTerm>& terms, int components, double t,
                           const Eigen::Vector2d& x, int derivative, int dim) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(components);
    for (const auto& term : terms) {
        const double tf = derivative == 0   ? term.time.value(t)
                          : derivative == 1 ? term.time.d1(t)
                                            : term.time.d2(t);
        v += term.amplitude * (tf * term.space.value(x, dim));
    }
    return v;
}

} // namespace

Eigen::VectorXd SpaceTimeField::value(double t, const Eigen::Vector2d& x) const {
    if (zero_) return Eigen::VectorXd::Zero(components_);
    if (value_) return value_(t, x);
    return eval_terms(terms_, components_, t, x, 0, components_);
}

Eigen::VectorXd SpaceTimeField::dt(double t, const Eigen::Vector2d& x) const {
    if (zero_) return Eigen::VectorXd::Zero(components_);
    if (value_) {
        if (!dt_) throw PreconditionError("field has no time derivative");
        return dt_(t, x);
    }
    return eval_terms(terms_, components_, t, x, 1, components_);
}

Eigen::VectorXd SpaceTimeField::dtt(double t, const Eigen::Vector2d& x) const {
    if (zero_) return Eigen::VectorXd::Zero(components_);
    if (value_) {
        if (!dtt_) throw PreconditionError("field has no second time derivative");
        return dtt_(t, x);
    }
    return eval_terms(terms_, components_, t, x, 2, components_);
}

Eigen::VectorXd SpaceTimeField::nodal(const CrackedMesh& mesh, double t, int derivative) const {
    const int nc = mesh.components();
    if (components_ != nc) throw ValidationError("field components do not match the mesh");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.ndof());
    if (zero_) return out;
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const Eigen::VectorXd v = derivative == 0   ? value(t, mesh.nodes[i])
                                  : derivative == 1 ? dt(t, mesh.nodes[i])
                                                    : dtt(t, mesh.nodes[i]);
        out.segment(i * nc, nc) = v;
    }
    return out;
}

ProblemData ProblemData::zero(int components) {
    ProblemData d;
    d.f = d.N = d.z = d.u0 = d.u1 = SpaceTimeField::zero(components);
    return d;
}

Eigen::VectorXd time_average(const SpaceTimeField& field, const CrackedMesh& mesh, int j,
                             double tau, int derivative) {
    static const std::array<double, 3> xi = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    static const std::array<double, 3> w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(mesh.ndof());
    if (field.is_zero()) return acc;
    const double mid = (j - 0.5) * tau;
    for (int q = 0; q < 3; ++q) acc += w[q] * field.nodal(mesh, mid + 0.5 * tau * xi[q], derivative);
    return 0.5 * acc;
}

Eigen::VectorXd load_vector(const ProblemData& data, const CrackedMesh& mesh,
                            const SparseMatrix& mass, int j, double tau) {
    if (j < 1) throw DomainError("load_vector: step index must be at least 1");
    if (data.f.is_zero()) return Eigen::VectorXd::Zero(mesh.ndof());
    return mass * time_average(data.f, mesh, j, tau);
}

Eigen::VectorXd neumann_vector(const ProblemData& data, const CrackedMesh& mesh,
                               const SparseMatrix& boundary_mass, int j, double tau) {
    if (data.N.is_zero()) return Eigen::VectorXd::Zero(mesh.ndof());
    return boundary_mass * data.N.nodal(mesh, j * tau);
}

DirichletSamples dirichlet_samples(const ProblemData& data, const CrackedMesh& mesh, int n,
                                   double T) {
    if (n < 1) throw DomainError("dirichlet_samples: n must be at least 1");
    const double tau = T / n;
    DirichletSamples s;
    s.z.resize(n + 1);
    s.dz.resize(n + 1);
    s.d2z.assign(n + 1, Eigen::VectorXd::Zero(mesh.ndof()));
    for (int j = 0; j <= n; ++j) s.z[j] = data.z.nodal(mesh, j * tau);
    s.dz[0] = data.z.nodal(mesh, 0.0, 1);
    for (int j = 1; j <= n; ++j) s.dz[j] = (s.z[j] - s.z[j - 1]) / tau;
    for (int j = 1; j <= n; ++j) s.d2z[j] = (s.dz[j] - s.dz[j - 1]) / tau;
    return s;
}

} // namespace fkv
