#include "fkv/domain.hpp"
#include "fkv/errors.hpp"

#include <algorithm>
#include <set>

namespace fkv {

double CrackSchedule::release_of(int segment) const {
    auto it = release_time.find(segment);
    return it == release_time.end() ? never : it->second;
}

double CrackSchedule::pair_release(const CrackPair& pair) const {
    double t = -never;
    for (int s : pair.segments) t = std::max(t, release_of(s));
    return pair.segments.empty() ? never : t;
}

bool CrackSchedule::is_fixed(double T) const {
    for (const auto& [segment, t] : release_time)
        if (t > 0.0 && t <= T) return false;
    return true;
}

bool check_h3(const CrackSchedule& schedule) {
    for (const auto& [segment, t] : schedule.reglue_time)
        if (t < CrackSchedule::never && schedule.release_of(segment) < CrackSchedule::never)
            return false;
    return true;
}

bool is_released(double release, int j, double tau) {
    return release <= j * tau + 1e-9 * tau;
}

ConstrainedSpace space_at(const CrackedMesh& mesh, const CrackSchedule& schedule, int j,
                          double tau) {
    if (j < 0) throw DomainError("space_at: negative step index");
    ConstrainedSpace space;
    space.time_index = j;
    const int nc = mesh.components();
    const int ndof = mesh.ndof();

    std::set<int> dirichlet_nodes;
    for (const auto& f : mesh.boundary_facets)
        if (f.tag == BoundaryTag::Dirichlet)
            for (int k = 0; k < mesh.dim; ++k) dirichlet_nodes.insert(f.nodes[k]);
    for (int node : dirichlet_nodes)
        for (int c = 0; c < nc; ++c) space.dirichlet_dofs.push_back(node * nc + c);

    // Each glued minus node is represented by its plus node.
    std::vector<int> representative(mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i) representative[i] = i;
    for (int p = 0; p < static_cast<int>(mesh.crack_pairs.size()); ++p) {
        const auto& pair = mesh.crack_pairs[p];
        if (!is_released(schedule.pair_release(pair), j, tau)) {
            space.tie_constraints.push_back(p);
            representative[pair.minus] = pair.plus;
        }
    }

    space.dof_map.assign(ndof, -1);
    std::vector<char> fixed(ndof, 0);
    for (int d : space.dirichlet_dofs) fixed[d] = 1;
    for (int node = 0; node < mesh.num_nodes(); ++node) {
        if (representative[node] != node) continue;
        for (int c = 0; c < nc; ++c) {
            const int d = node * nc + c;
            if (fixed[d]) continue;
            space.dof_map[d] = static_cast<int>(space.free_dofs.size());
            space.free_dofs.push_back(d);
        }
    }
    for (int node = 0; node < mesh.num_nodes(); ++node) {
        const int rep = representative[node];
        if (rep == node) continue;
        for (int c = 0; c < nc; ++c) space.dof_map[node * nc + c] = space.dof_map[rep * nc + c];
    }
    return space;
}

Eigen::SparseMatrix<double> ConstrainedSpace::prolongation() const {
    std::vector<Eigen::Triplet<double>> trip;
    for (int d = 0; d < static_cast<int>(dof_map.size()); ++d)
        if (dof_map[d] >= 0) trip.emplace_back(d, dof_map[d], 1.0);
    Eigen::SparseMatrix<double> p(static_cast<int>(dof_map.size()), num_free());
    p.setFromTriplets(trip.begin(), trip.end());
    return p;
}

Eigen::VectorXd ConstrainedSpace::restrict_dual(const Eigen::VectorXd& full) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(num_free());
    for (int d = 0; d < static_cast<int>(dof_map.size()); ++d)
        if (dof_map[d] >= 0) r[dof_map[d]] += full[d];
    return r;
}

Eigen::VectorXd ConstrainedSpace::expand(const Eigen::VectorXd& reduced) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<int>(dof_map.size()));
    for (int d = 0; d < static_cast<int>(dof_map.size()); ++d)
        if (dof_map[d] >= 0) v[d] = reduced[dof_map[d]];
    return v;
}

bool ConstrainedSpace::contains(const Eigen::VectorXd& v, double tol) const {
    if (v.size() != static_cast<Eigen::Index>(dof_map.size())) return false;
    for (int d : dirichlet_dofs)
        if (std::abs(v[d]) > tol) return false;
    for (int d = 0; d < static_cast<int>(dof_map.size()); ++d) {
        const int k = dof_map[d];
        if (k >= 0 && std::abs(v[d] - v[free_dofs[k]]) > tol) return false;
    }
    return true;
}

bool ConstrainedSpace::same_constraints(const ConstrainedSpace& other) const {
    return tie_constraints == other.tie_constraints && dirichlet_dofs == other.dirichlet_dofs;
}

} // namespace fkv
