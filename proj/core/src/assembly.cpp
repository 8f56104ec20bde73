#include "fkv/assembly.hpp"
#include "fkv/errors.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace fkv {

Material Material::create(SymTensor elastic, SymTensor viscous, std::optional<double> gamma,
                          bool check_gamma) {
    if (elastic.rows() != elastic.cols() || (elastic.rows() != 1 && elastic.rows() != 3))
        throw ValidationError("elastic tensor must be 1x1 or 3x3");
    if (viscous.rows() != elastic.rows() || viscous.cols() != elastic.cols())
        throw ValidationError("viscous and elastic tensors differ in size");
    if (!is_symmetric(elastic)) throw ValidationError("elastic tensor is not symmetric");
    if (!is_symmetric(viscous)) throw ValidationError("viscous tensor is not symmetric");
    const double lam_c = min_eigenvalue(elastic);
    const double lam_b = min_eigenvalue(viscous);
    if (!(lam_c > 0.0)) throw ValidationError("elastic tensor is not coercive");
    if (lam_b < -1e-12 * std::max(1.0, viscous.norm()))
        throw ValidationError("viscous tensor is not nonnegative");
    Material m;
    m.elastic = std::move(elastic);
    m.viscous = std::move(viscous);
    m.gamma = gamma.value_or(lam_c);
    if (!(m.gamma > 0.0)) throw ValidationError("coercivity constant gamma must be positive");
    if (check_gamma && m.gamma > lam_c * (1.0 + 1e-12))
        throw ValidationError("elastic tensor is not coercive with the claimed gamma");
    return m;
}

double element_measure(const CrackedMesh& mesh, int e) {
    const auto& el = mesh.elements[e];
    if (mesh.dim == 1) return std::abs(mesh.nodes[el[1]].x() - mesh.nodes[el[0]].x());
    const Eigen::Vector2d a = mesh.nodes[el[1]] - mesh.nodes[el[0]];
    const Eigen::Vector2d b = mesh.nodes[el[2]] - mesh.nodes[el[0]];
    return 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
}

std::vector<int> element_dofs(const CrackedMesh& mesh, int e) {
    const int nc = mesh.components();
    std::vector<int> dofs;
    for (int k = 0; k < mesh.nodes_per_element(); ++k)
        for (int c = 0; c < nc; ++c) dofs.push_back(mesh.elements[e][k] * nc + c);
    return dofs;
}

Eigen::MatrixXd element_strain_operator(const CrackedMesh& mesh, int e) {
    const auto& el = mesh.elements[e];
    if (mesh.dim == 1) {
        const double h = mesh.nodes[el[1]].x() - mesh.nodes[el[0]].x();
        Eigen::MatrixXd b(1, 2);
        b << -1.0 / h, 1.0 / h;
        return b;
    }
    const Eigen::Vector2d& p0 = mesh.nodes[el[0]];
    const Eigen::Vector2d& p1 = mesh.nodes[el[1]];
    const Eigen::Vector2d& p2 = mesh.nodes[el[2]];
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    if (det == 0.0) throw ValidationError("degenerate triangle " + std::to_string(e));
    const double gx[3] = {(p1.y() - p2.y()) / det, (p2.y() - p0.y()) / det, (p0.y() - p1.y()) / det};
    const double gy[3] = {(p2.x() - p1.x()) / det, (p0.x() - p2.x()) / det, (p1.x() - p0.x()) / det};
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 6);
    for (int i = 0; i < 3; ++i) {
        b(0, 2 * i) = gx[i];
        b(1, 2 * i + 1) = gy[i];
        b(2, 2 * i) = r * gy[i];
        b(2, 2 * i + 1) = r * gx[i];
    }
    return b;
}

namespace {

std::vector<int> order_of(const CrackedMesh& mesh, const AssemblyOptions& opts) {
    if (opts.element_order.empty()) {
        std::vector<int> order(mesh.num_elements());
        std::iota(order.begin(), order.end(), 0);
        return order;
    }
    if (static_cast<int>(opts.element_order.size()) != mesh.num_elements())
        throw ValidationError("element order is not a permutation of the elements");
    std::vector<char> seen(mesh.num_elements(), 0);
    for (int e : opts.element_order) {
        if (e < 0 || e >= mesh.num_elements() || seen[e])
            throw ValidationError("element order is not a permutation of the elements");
        seen[e] = 1;
    }
    return opts.element_order;
}

template <class ElementMatrix>
SparseMatrix assemble(const CrackedMesh& mesh, const AssemblyOptions& opts, ElementMatrix&& em) {
    std::vector<Eigen::Triplet<double>> trip;
    for (int e : order_of(mesh, opts)) {
        Eigen::MatrixXd ke = em(e);
        ke = 0.5 * (ke + ke.transpose()).eval();
        const auto dofs = element_dofs(mesh, e);
        for (int a = 0; a < static_cast<int>(dofs.size()); ++a)
            for (int b = 0; b < static_cast<int>(dofs.size()); ++b)
                if (ke(a, b) != 0.0) trip.emplace_back(dofs[a], dofs[b], ke(a, b));
    }
    SparseMatrix m(mesh.ndof(), mesh.ndof());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

} // namespace

SparseMatrix mass_matrix(const CrackedMesh& mesh, const AssemblyOptions& opts) {
    const int npe = mesh.nodes_per_element();
    const int nc = mesh.components();
    return assemble(mesh, opts, [&](int e) {
        const double m = element_measure(mesh, e);
        Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(npe * nc, npe * nc);
        // Exact P1 mass: measure/(npe (npe+1)) * (1 + delta_ab) for d = 1, 2.
        const double unit = m / (npe * (npe + 1));
        for (int a = 0; a < npe; ++a)
            for (int b = 0; b < npe; ++b)
                for (int c = 0; c < nc; ++c) ke(a * nc + c, b * nc + c) = unit * (a == b ? 2.0 : 1.0);
        return ke;
    });
}

SparseMatrix stiffness_matrix(const CrackedMesh& mesh, const SymTensor& tensor,
                              const AssemblyOptions& opts) {
    if (tensor.rows() != mandel_size(mesh.dim))
        throw ValidationError("tensor size does not match the mesh dimension");
    return assemble(mesh, opts, [&](int e) {
        const Eigen::MatrixXd b = element_strain_operator(mesh, e);
        return Eigen::MatrixXd(element_measure(mesh, e) * b.transpose() * tensor * b);
    });
}

SparseMatrix boundary_mass_matrix(const CrackedMesh& mesh) {
    const int nc = mesh.components();
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& f : mesh.boundary_facets) {
        if (f.tag != BoundaryTag::Neumann) continue;
        if (mesh.dim == 1) {
            for (int c = 0; c < nc; ++c) trip.emplace_back(f.nodes[0] * nc + c, f.nodes[0] * nc + c, 1.0);
            continue;
        }
        const double len = (mesh.nodes[f.nodes[1]] - mesh.nodes[f.nodes[0]]).norm();
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < nc; ++c)
                    trip.emplace_back(f.nodes[a] * nc + c, f.nodes[b] * nc + c,
                                      len / 6.0 * (a == b ? 2.0 : 1.0));
    }
    SparseMatrix m(mesh.ndof(), mesh.ndof());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

SparseMatrix restrict_matrix(const SparseMatrix& a, const ConstrainedSpace& space) {
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < a.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
            const int i = space.dof_map[it.row()], j = space.dof_map[it.col()];
            if (i >= 0 && j >= 0) trip.emplace_back(i, j, it.value());
        }
    SparseMatrix r(space.num_free(), space.num_free());
    r.setFromTriplets(trip.begin(), trip.end());
    SparseMatrix rt = r.transpose();
    SparseMatrix sym = 0.5 * (r + rt);
    sym.makeCompressed();
    return sym;
}

void write_matrix(std::ostream& out, const SparseMatrix& a) {
    out << "# rows cols nnz\n" << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << "\n";
    out << std::setprecision(17);
    for (int col = 0; col < a.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(a, col); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << it.value() << "\n";
}

Operators assemble_operators(const CrackedMesh& mesh, const Material& material,
                             const SymTensor& visc, const AssemblyOptions& opts) {
    Operators ops;
    ops.mass = mass_matrix(mesh, opts);
    ops.elastic = stiffness_matrix(mesh, material.elastic, opts);
    ops.viscous = stiffness_matrix(mesh, visc, opts);
    ops.boundary = boundary_mass_matrix(mesh);
    ops.strain = stiffness_matrix(mesh, identity_tensor(mesh.dim), opts);
    return ops;
}

} // namespace fkv
