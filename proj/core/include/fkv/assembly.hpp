#pragma once

#include "fkv/domain.hpp"
#include "fkv/kernel.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace fkv {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Material {
    SymTensor elastic;
    SymTensor viscous;
    double gamma = 0.0;

    // gamma defaults to the smallest eigenvalue of the elastic tensor; a
    // claimed gamma is verified when check_gamma is set.
    static Material create(SymTensor elastic, SymTensor viscous,
                           std::optional<double> gamma = std::nullopt, bool check_gamma = true);
};

struct AssemblyOptions {
    // Order in which element contributions are summed; empty means natural order.
    std::vector<int> element_order;
};

// Strain operator of element e in Mandel coordinates: rows = mandel_size,
// columns = element DOFs (node-major, component-minor).
Eigen::MatrixXd element_strain_operator(const CrackedMesh& mesh, int e);
double element_measure(const CrackedMesh& mesh, int e);
std::vector<int> element_dofs(const CrackedMesh& mesh, int e);

// Matrices act on the full (unglued) DOF vector.
SparseMatrix mass_matrix(const CrackedMesh& mesh, const AssemblyOptions& opts = {});
SparseMatrix stiffness_matrix(const CrackedMesh& mesh, const SymTensor& tensor,
                              const AssemblyOptions& opts = {});
// Trace pairing on the Neumann boundary; point evaluation for d = 1.
SparseMatrix boundary_mass_matrix(const CrackedMesh& mesh);
// P^T A P for the prolongation P of the space.
SparseMatrix restrict_matrix(const SparseMatrix& a, const ConstrainedSpace& space);

void write_matrix(std::ostream& out, const SparseMatrix& a);

// Scalar time factor with two derivatives.
struct TimeFactor {
    enum class Kind { Constant, Power, Sine, Exponential };
    Kind kind = Kind::Constant;
    double a = 0.0;  // power, angular frequency or rate
    double b = 0.0;  // phase for Sine

    double value(double t) const;
    double d1(double t) const;
    double d2(double t) const;
};

struct SpaceFactor {
    enum class Kind { Constant, Monomial, Trig };
    Kind kind = Kind::Constant;
    // Monomial: x^px y^py. Trig: prod_d sin(k_d x_d + phase_d).
    Eigen::Vector2d k = Eigen::Vector2d::Zero();
    Eigen::Vector2d phase = Eigen::Vector2d::Zero();

    double value(const Eigen::Vector2d& x, int dim) const;
};

struct SeparableTerm {
    Eigen::VectorXd amplitude;
    TimeFactor time;
    SpaceFactor space;
};

// Vector field of (t, x) with analytic time derivatives.
class SpaceTimeField {
public:
    using Fn = std::function<Eigen::VectorXd(double, const Eigen::Vector2d&)>;

    SpaceTimeField() = default;
    static SpaceTimeField zero(int components);
    static SpaceTimeField from_terms(int components, std::vector<SeparableTerm> terms);
    static SpaceTimeField from_functions(int components, Fn value, Fn dt, Fn dtt);

    int components() const { return components_; }
    bool is_zero() const { return zero_; }

    Eigen::VectorXd value(double t, const Eigen::Vector2d& x) const;
    Eigen::VectorXd dt(double t, const Eigen::Vector2d& x) const;
    Eigen::VectorXd dtt(double t, const Eigen::Vector2d& x) const;

    // Nodal interpolant; derivative = 0, 1 or 2.
    Eigen::VectorXd nodal(const CrackedMesh& mesh, double t, int derivative = 0) const;

private:
    int components_ = 1;
    bool zero_ = true;
    std::vector<SeparableTerm> terms_;
    Fn value_, dt_, dtt_;
};

struct ProblemData {
    SpaceTimeField f;
    SpaceTimeField N;
    SpaceTimeField z;
    SpaceTimeField u0;
    SpaceTimeField u1;

    static ProblemData zero(int components);
};

// Mean of the field over ((j-1) tau, j tau) by 3-point Gauss quadrature.
Eigen::VectorXd time_average(const SpaceTimeField& field, const CrackedMesh& mesh, int j,
                             double tau, int derivative = 0);

// M times the time-averaged nodal body force.
Eigen::VectorXd load_vector(const ProblemData& data, const CrackedMesh& mesh,
                            const SparseMatrix& mass, int j, double tau);
// Boundary pairing of N(j tau).
Eigen::VectorXd neumann_vector(const ProblemData& data, const CrackedMesh& mesh,
                               const SparseMatrix& boundary_mass, int j, double tau);

struct DirichletSamples {
    std::vector<Eigen::VectorXd> z;    // j = 0..n
    std::vector<Eigen::VectorXd> dz;   // j = 0..n, dz[0] = zdot(0)
    std::vector<Eigen::VectorXd> d2z;  // j = 1..n, d2z[0] unused (zero)
};

DirichletSamples dirichlet_samples(const ProblemData& data, const CrackedMesh& mesh, int n,
                                   double T);

// Assembled operators of a problem on the full DOF vector.
struct Operators {
    SparseMatrix mass;
    SparseMatrix elastic;
    SparseMatrix viscous;
    SparseMatrix boundary;
    // Stiffness with the identity tensor: |e v|^2_H = v^T strain v.
    SparseMatrix strain;
};

Operators assemble_operators(const CrackedMesh& mesh, const Material& material,
                             const SymTensor& visc, const AssemblyOptions& opts = {});

} // namespace fkv
