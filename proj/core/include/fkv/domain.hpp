#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace fkv {

enum class BoundaryTag { Dirichlet, Neumann };

// A boundary point (d = 1) or edge (d = 2).
struct BoundaryFacet {
    std::array<int, 2> nodes{-1, -1};
    BoundaryTag tag = BoundaryTag::Neumann;
};

// Two coincident nodes on either side of a crack path. A node shared by two
// segments carries both ids and opens once the later one is released.
struct CrackPair {
    int plus = -1;
    int minus = -1;
    std::vector<int> segments;
};

struct CrackedMesh {
    int dim = 1;
    std::vector<Eigen::Vector2d> nodes;
    std::vector<std::array<int, 3>> elements;
    std::vector<BoundaryFacet> boundary_facets;
    std::vector<CrackPair> crack_pairs;

    int nodes_per_element() const { return dim + 1; }
    int components() const { return dim; }
    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_elements() const { return static_cast<int>(elements.size()); }
    int ndof() const { return num_nodes() * components(); }
    std::vector<int> segment_ids() const;
    double measure() const;
};

struct CrackFacet {
    int a = -1;
    int b = -1;
    int segment = 0;
};

// Mesh before crack duplication.
struct RawMesh {
    int dim = 1;
    std::vector<Eigen::Vector2d> nodes;
    std::vector<std::array<int, 3>> elements;
    std::vector<BoundaryFacet> boundary_facets;
    std::vector<CrackFacet> crack_facets;
};

struct CrackPath {
    int segment = 0;
    std::vector<Eigen::Vector2d> points;
};

struct GeometrySpec {
    enum class Kind { Interval, Rectangle };
    Kind kind = Kind::Interval;
    double length = 1.0;
    int elements = 8;
    double width = 1.0;
    double height = 1.0;
    int nx = 8;
    int ny = 8;
    // Any of "left", "right", "bottom", "top"; the rest of the boundary is Neumann.
    std::vector<std::string> dirichlet;
    std::vector<CrackPath> cracks;
};

CrackedMesh build_mesh(const GeometrySpec& spec);
// Validates the crack facets and duplicates interior crack nodes.
CrackedMesh finalize_mesh(const RawMesh& raw);

RawMesh read_mesh(std::istream& in);
void write_mesh(std::ostream& out, const CrackedMesh& mesh);

struct CrackSchedule {
    static constexpr double never = std::numeric_limits<double>::infinity();

    std::map<int, double> release_time;
    // Times at which a released segment would be glued again. Threshold
    // schedules leave this empty; it exists so that check_h3 can reject it.
    std::map<int, double> reglue_time;

    double release_of(int segment) const;
    double pair_release(const CrackPair& pair) const;
    // No segment opens inside (0, T].
    bool is_fixed(double T) const;
};

bool check_h3(const CrackSchedule& schedule);

struct ConstrainedSpace {
    int time_index = 0;
    std::vector<int> tie_constraints;
    std::vector<int> dirichlet_dofs;
    // Full DOFs that carry an unknown, in unknown order.
    std::vector<int> free_dofs;
    // Full DOF to unknown index; -1 on Dirichlet DOFs.
    std::vector<int> dof_map;

    int num_free() const { return static_cast<int>(free_dofs.size()); }
    Eigen::SparseMatrix<double> prolongation() const;
    Eigen::VectorXd restrict_dual(const Eigen::VectorXd& full) const;
    Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;
    bool contains(const Eigen::VectorXd& v, double tol = 0.0) const;
    bool same_constraints(const ConstrainedSpace& other) const;
};

// Release exactly at j*tau counts as released at step j.
bool is_released(double release, int j, double tau);

ConstrainedSpace space_at(const CrackedMesh& mesh, const CrackSchedule& schedule, int j,
                          double tau);

} // namespace fkv
