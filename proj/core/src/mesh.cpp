#include "fkv/domain.hpp"
#include "fkv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace fkv {

std::vector<int> CrackedMesh::segment_ids() const {
    std::set<int> ids;
    for (const auto& p : crack_pairs) ids.insert(p.segments.begin(), p.segments.end());
    return {ids.begin(), ids.end()};
}

double CrackedMesh::measure() const {
    double total = 0.0;
    for (const auto& e : elements) {
        if (dim == 1) {
            total += std::abs(nodes[e[1]].x() - nodes[e[0]].x());
        } else {
            const Eigen::Vector2d a = nodes[e[1]] - nodes[e[0]];
            const Eigen::Vector2d b = nodes[e[2]] - nodes[e[0]];
            total += 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
        }
    }
    return total;
}

namespace {

using Edge = std::pair<int, int>;

Edge edge_key(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

BoundaryTag side_tag(const GeometrySpec& spec, const std::string& side) {
    for (const auto& s : spec.dirichlet)
        if (s == side) return BoundaryTag::Dirichlet;
    return BoundaryTag::Neumann;
}

void check_sides(const GeometrySpec& spec, const std::vector<std::string>& allowed) {
    for (const auto& s : spec.dirichlet)
        if (std::find(allowed.begin(), allowed.end(), s) == allowed.end())
            throw ValidationError("unknown boundary side '" + s + "'");
}

RawMesh interval_mesh(const GeometrySpec& spec) {
    if (spec.elements < 1) throw ValidationError("interval needs at least one element");
    if (!(spec.length > 0.0)) throw ValidationError("interval length must be positive");
    if (!spec.cracks.empty()) throw ValidationError("a crack cannot lie inside a 1D domain");
    check_sides(spec, {"left", "right"});
    RawMesh raw;
    raw.dim = 1;
    const int ne = spec.elements;
    for (int i = 0; i <= ne; ++i) raw.nodes.emplace_back(spec.length * i / ne, 0.0);
    for (int i = 0; i < ne; ++i) raw.elements.push_back({i, i + 1, -1});
    raw.boundary_facets.push_back({{0, -1}, side_tag(spec, "left")});
    raw.boundary_facets.push_back({{ne, -1}, side_tag(spec, "right")});
    return raw;
}

RawMesh rectangle_mesh(const GeometrySpec& spec) {
    if (spec.nx < 1 || spec.ny < 1) throw ValidationError("rectangle needs nx, ny >= 1");
    if (!(spec.width > 0.0 && spec.height > 0.0))
        throw ValidationError("rectangle sides must be positive");
    check_sides(spec, {"left", "right", "bottom", "top"});
    RawMesh raw;
    raw.dim = 2;
    const int nx = spec.nx, ny = spec.ny;
    const double hx = spec.width / nx, hy = spec.height / ny;
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            raw.nodes.emplace_back(spec.width * i / nx, spec.height * j / ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            raw.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            raw.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    for (int i = 0; i < nx; ++i) {
        raw.boundary_facets.push_back({{id(i, 0), id(i + 1, 0)}, side_tag(spec, "bottom")});
        raw.boundary_facets.push_back({{id(i, ny), id(i + 1, ny)}, side_tag(spec, "top")});
    }
    for (int j = 0; j < ny; ++j) {
        raw.boundary_facets.push_back({{id(0, j), id(0, j + 1)}, side_tag(spec, "left")});
        raw.boundary_facets.push_back({{id(nx, j), id(nx, j + 1)}, side_tag(spec, "right")});
    }

    auto to_grid = [&](const Eigen::Vector2d& p, int& gi, int& gj) {
        const double fi = p.x() / hx, fj = p.y() / hy;
        gi = static_cast<int>(std::lround(fi));
        gj = static_cast<int>(std::lround(fj));
        if (std::abs(fi - gi) > 1e-9 || std::abs(fj - gj) > 1e-9)
            throw ValidationError("crack vertex is not a grid node");
        if (gi < 0 || gi > nx || gj < 0 || gj > ny)
            throw ValidationError("crack vertex lies outside the rectangle");
    };
    for (const auto& path : spec.cracks) {
        if (path.points.size() < 2) throw ValidationError("crack path needs two points");
        for (std::size_t p = 0; p + 1 < path.points.size(); ++p) {
            int i0, j0, i1, j1;
            to_grid(path.points[p], i0, j0);
            to_grid(path.points[p + 1], i1, j1);
            const int di = i1 - i0, dj = j1 - j0;
            if (di == 0 && dj == 0) throw ValidationError("degenerate crack segment");
            // Grid lines and the (1,1) cell diagonals are the only mesh edges.
            const bool axis = di == 0 || dj == 0;
            const bool diagonal = di == dj;
            if (!axis && !diagonal) throw ValidationError("crack path does not follow mesh facets");
            const int steps = std::max(std::abs(di), std::abs(dj));
            const int si = (di > 0) - (di < 0), sj = (dj > 0) - (dj < 0);
            for (int s = 0; s < steps; ++s)
                raw.crack_facets.push_back({id(i0 + s * si, j0 + s * sj),
                                            id(i0 + (s + 1) * si, j0 + (s + 1) * sj),
                                            path.segment});
        }
    }
    return raw;
}

int find_root(std::vector<int>& parent, int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
}

} // namespace

CrackedMesh build_mesh(const GeometrySpec& spec) {
    return finalize_mesh(spec.kind == GeometrySpec::Kind::Interval ? interval_mesh(spec)
                                                                   : rectangle_mesh(spec));
}

CrackedMesh finalize_mesh(const RawMesh& raw) {
    if (raw.dim != 1 && raw.dim != 2) throw ValidationError("mesh dimension must be 1 or 2");
    const int nn = static_cast<int>(raw.nodes.size());
    const int npe = raw.dim + 1;
    for (const auto& e : raw.elements)
        for (int k = 0; k < npe; ++k)
            if (e[k] < 0 || e[k] >= nn) throw ValidationError("element references a missing node");
    for (const auto& f : raw.boundary_facets)
        for (int k = 0; k < raw.dim; ++k)
            if (f.nodes[k] < 0 || f.nodes[k] >= nn)
                throw ValidationError("boundary facet references a missing node");

    CrackedMesh mesh;
    mesh.dim = raw.dim;
    mesh.nodes = raw.nodes;
    mesh.elements = raw.elements;
    mesh.boundary_facets = raw.boundary_facets;
    if (raw.crack_facets.empty()) return mesh;
    if (raw.dim == 1) throw ValidationError("a crack cannot lie inside a 1D domain");

    std::map<Edge, std::vector<int>> edge_elems;
    for (int e = 0; e < static_cast<int>(raw.elements.size()); ++e)
        for (int k = 0; k < 3; ++k)
            edge_elems[edge_key(raw.elements[e][k], raw.elements[e][(k + 1) % 3])].push_back(e);
    std::vector<char> on_boundary(nn, 0);
    for (const auto& [edge, elems] : edge_elems)
        if (elems.size() == 1) on_boundary[edge.first] = on_boundary[edge.second] = 1;

    std::map<Edge, int> crack_edges;
    std::map<int, std::vector<int>> incident;  // node -> segments of incident crack facets
    for (const auto& f : raw.crack_facets) {
        if (f.a < 0 || f.a >= nn || f.b < 0 || f.b >= nn)
            throw ValidationError("crack facet references a missing node");
        const Edge key = edge_key(f.a, f.b);
        auto it = edge_elems.find(key);
        if (it == edge_elems.end()) throw ValidationError("crack path does not follow mesh facets");
        if (it->second.size() != 2 || on_boundary[f.a] || on_boundary[f.b])
            throw ValidationError("crack reaches the boundary");
        if (!crack_edges.emplace(key, f.segment).second)
            throw ValidationError("crack facet listed twice");
        incident[f.a].push_back(f.segment);
        incident[f.b].push_back(f.segment);
    }

    struct Split {
        int node;
        std::vector<int> minus_elems;
        std::vector<int> segments;
    };
    std::vector<Split> splits;
    for (const auto& [node, segs] : incident) {
        if (segs.size() == 1) continue;  // crack tip stays continuous
        if (segs.size() > 2) throw ValidationError("branching crack paths are not supported");
        std::vector<int> star;
        for (int e = 0; e < static_cast<int>(raw.elements.size()); ++e)
            for (int k = 0; k < 3; ++k)
                if (raw.elements[e][k] == node) star.push_back(e);
        std::vector<int> parent(star.size());
        std::iota(parent.begin(), parent.end(), 0);
        std::map<int, std::vector<int>> by_neighbour;
        for (int s = 0; s < static_cast<int>(star.size()); ++s)
            for (int k = 0; k < 3; ++k) {
                const int other = raw.elements[star[s]][k];
                if (other != node && !crack_edges.count(edge_key(node, other)))
                    by_neighbour[other].push_back(s);
            }
        for (const auto& [other, members] : by_neighbour)
            for (std::size_t m = 1; m < members.size(); ++m)
                parent[find_root(parent, members[m])] = find_root(parent, members[0]);
        std::set<int> roots;
        for (int s = 0; s < static_cast<int>(star.size()); ++s) roots.insert(find_root(parent, s));
        if (roots.size() != 2) throw ValidationError("crack does not split the mesh locally");
        // The component holding the lowest element index keeps the node.
        const int keep = find_root(parent, 0);
        Split split{node, {}, segs};
        for (int s = 0; s < static_cast<int>(star.size()); ++s)
            if (find_root(parent, s) != keep) split.minus_elems.push_back(star[s]);
        std::sort(split.segments.begin(), split.segments.end());
        split.segments.erase(std::unique(split.segments.begin(), split.segments.end()),
                             split.segments.end());
        splits.push_back(std::move(split));
    }

    for (const auto& split : splits) {
        const int minus = static_cast<int>(mesh.nodes.size());
        mesh.nodes.push_back(mesh.nodes[split.node]);
        for (int e : split.minus_elems)
            for (int k = 0; k < 3; ++k)
                if (mesh.elements[e][k] == split.node) mesh.elements[e][k] = minus;
        mesh.crack_pairs.push_back({split.node, minus, split.segments});
    }
    return mesh;
}

namespace {

std::string next_token_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
    }
    return {};
}

int section_count(const std::string& line, const std::string& name) {
    std::istringstream ss(line);
    std::string word;
    int count = -1;
    if (!(ss >> word >> count) || word != name || count < 0)
        throw ValidationError("mesh file: expected '" + name + " <count>'");
    return count;
}

} // namespace

RawMesh read_mesh(std::istream& in) {
    std::string line = next_token_line(in);
    {
        std::istringstream ss(line);
        std::string magic;
        int version = 0;
        if (!(ss >> magic >> version) || magic != "fkv-mesh" || version != 1)
            throw ValidationError("mesh file: missing 'fkv-mesh 1' header");
    }
    RawMesh raw;
    raw.dim = section_count(next_token_line(in), "dim");
    if (raw.dim != 1 && raw.dim != 2) throw ValidationError("mesh file: dim must be 1 or 2");
    const int nn = section_count(next_token_line(in), "nodes");
    for (int i = 0; i < nn; ++i) {
        std::istringstream ss(next_token_line(in));
        double x = 0, y = 0;
        if (!(ss >> x) || (raw.dim == 2 && !(ss >> y)))
            throw ValidationError("mesh file: bad node line");
        raw.nodes.emplace_back(x, y);
    }
    const int ne = section_count(next_token_line(in), "elements");
    for (int i = 0; i < ne; ++i) {
        std::istringstream ss(next_token_line(in));
        std::array<int, 3> e{-1, -1, -1};
        for (int k = 0; k <= raw.dim; ++k)
            if (!(ss >> e[k])) throw ValidationError("mesh file: bad element line");
        raw.elements.push_back(e);
    }
    for (line = next_token_line(in); !line.empty(); line = next_token_line(in)) {
        std::istringstream head(line);
        std::string name;
        head >> name;
        if (name == "boundary") {
            const int nb = section_count(line, "boundary");
            for (int i = 0; i < nb; ++i) {
                std::istringstream ss(next_token_line(in));
                BoundaryFacet f;
                std::string tag;
                for (int k = 0; k < raw.dim; ++k)
                    if (!(ss >> f.nodes[k])) throw ValidationError("mesh file: bad boundary line");
                if (!(ss >> tag) || (tag != "dirichlet" && tag != "neumann"))
                    throw ValidationError("mesh file: boundary tag must be dirichlet or neumann");
                f.tag = tag == "dirichlet" ? BoundaryTag::Dirichlet : BoundaryTag::Neumann;
                raw.boundary_facets.push_back(f);
            }
        } else if (name == "cracks") {
            const int nc = section_count(line, "cracks");
            for (int i = 0; i < nc; ++i) {
                std::istringstream ss(next_token_line(in));
                CrackFacet f;
                if (!(ss >> f.a >> f.b >> f.segment))
                    throw ValidationError("mesh file: bad crack line");
                raw.crack_facets.push_back(f);
            }
        } else {
            throw ValidationError("mesh file: unknown section '" + name + "'");
        }
    }
    return raw;
}

void write_mesh(std::ostream& out, const CrackedMesh& mesh) {
    out << "fkv-mesh 1\n";
    out << "dim " << mesh.dim << "\n";
    out << std::setprecision(17);
    out << "nodes " << mesh.num_nodes() << "\n";
    for (const auto& p : mesh.nodes) {
        out << p.x();
        if (mesh.dim == 2) out << ' ' << p.y();
        out << "\n";
    }
    out << "elements " << mesh.num_elements() << "\n";
    for (const auto& e : mesh.elements) {
        for (int k = 0; k <= mesh.dim; ++k) out << (k ? " " : "") << e[k];
        out << "\n";
    }
    out << "boundary " << mesh.boundary_facets.size() << "\n";
    for (const auto& f : mesh.boundary_facets) {
        for (int k = 0; k < mesh.dim; ++k) out << f.nodes[k] << ' ';
        out << (f.tag == BoundaryTag::Dirichlet ? "dirichlet" : "neumann") << "\n";
    }
    out << "# crack pairs: plus minus segments\n";
    for (const auto& p : mesh.crack_pairs) {
        out << "# pair " << p.plus << ' ' << p.minus;
        for (int s : p.segments) out << ' ' << s;
        out << "\n";
    }
}

} // namespace fkv
