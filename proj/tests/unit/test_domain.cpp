#include "fkv/domain.hpp"
#include "fkv/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

using namespace fkv;

namespace {

GeometrySpec square(int cells, std::vector<CrackPath> cracks = {}) {
    GeometrySpec g;
    g.kind = GeometrySpec::Kind::Rectangle;
    g.nx = g.ny = cells;
    g.dirichlet = {"bottom"};
    g.cracks = std::move(cracks);
    return g;
}

CrackPath path(int seg, std::initializer_list<Eigen::Vector2d> pts) { return {seg, pts}; }

} // namespace

TEST(BuildMesh, Interval) {
    GeometrySpec g;
    g.length = 2.0;
    g.elements = 4;
    g.dirichlet = {"left"};
    const CrackedMesh m = build_mesh(g);
    EXPECT_EQ(m.dim, 1);
    EXPECT_EQ(m.num_nodes(), 5);
    EXPECT_EQ(m.num_elements(), 4);
    EXPECT_DOUBLE_EQ(m.measure(), 2.0);
    ASSERT_EQ(m.boundary_facets.size(), 2u);
    int dirichlet = 0;
    for (const auto& f : m.boundary_facets) dirichlet += f.tag == BoundaryTag::Dirichlet;
    EXPECT_EQ(dirichlet, 1);
}

TEST(BuildMesh, RectangleWithoutCrack) {
    const CrackedMesh m = build_mesh(square(4));
    EXPECT_EQ(m.num_nodes(), 25);
    EXPECT_EQ(m.num_elements(), 32);
    EXPECT_EQ(m.boundary_facets.size(), 16u);
    EXPECT_NEAR(m.measure(), 1.0, 1e-14);
    EXPECT_TRUE(m.crack_pairs.empty());
}

TEST(BuildMesh, CrackDuplicatesInteriorNodesOnly) {
    const CrackedMesh m =
        build_mesh(square(8, {path(0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.75, 0.5)})}));
    // Five nodes on the path; the two tips stay single.
    EXPECT_EQ(m.num_nodes(), 81 + 3);
    ASSERT_EQ(m.crack_pairs.size(), 3u);
    for (const auto& p : m.crack_pairs) {
        EXPECT_TRUE(m.nodes[p.plus].isApprox(m.nodes[p.minus]));
        EXPECT_EQ(p.segments, std::vector<int>{0});
        EXPECT_NEAR(m.nodes[p.plus].y(), 0.5, 1e-14);
    }
    // No element uses both nodes of a pair.
    for (const auto& e : m.elements)
        for (const auto& p : m.crack_pairs) {
            const bool a = std::count(e.begin(), e.end(), p.plus) > 0;
            const bool b = std::count(e.begin(), e.end(), p.minus) > 0;
            EXPECT_FALSE(a && b);
        }
}

TEST(BuildMesh, DiagonalCrack) {
    const CrackedMesh m =
        build_mesh(square(8, {path(0, {Eigen::Vector2d(0.25, 0.25), Eigen::Vector2d(0.75, 0.75)})}));
    EXPECT_EQ(m.crack_pairs.size(), 3u);
}

TEST(BuildMesh, JunctionNodeCarriesBothSegments) {
    const CrackedMesh m = build_mesh(square(8, {path(0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.5, 0.5)}),
                                                path(1, {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.75, 0.5)})}));
    ASSERT_EQ(m.crack_pairs.size(), 3u);
    int junctions = 0;
    for (const auto& p : m.crack_pairs) junctions += p.segments.size() == 2;
    EXPECT_EQ(junctions, 1);
    EXPECT_EQ(m.segment_ids(), (std::vector<int>{0, 1}));
}

TEST(BuildMesh, RejectsInvalidCracks) {
    EXPECT_THROW(build_mesh(square(8, {path(0, {Eigen::Vector2d(0.0, 0.5), Eigen::Vector2d(0.5, 0.5)})})),
                 ValidationError);
    EXPECT_THROW(build_mesh(square(8, {path(0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.5, 0.625)})})),
                 ValidationError);
    EXPECT_THROW(build_mesh(square(8, {path(0, {Eigen::Vector2d(0.3, 0.5), Eigen::Vector2d(0.5, 0.5)})})),
                 ValidationError);
    // Three arms meeting at one node.
    EXPECT_THROW(build_mesh(square(8, {path(0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.5, 0.5)}),
                                       path(1, {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.75, 0.5)}),
                                       path(2, {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.75)})})),
                 ValidationError);
    GeometrySpec g;
    g.cracks = {path(0, {Eigen::Vector2d(0.2, 0.0), Eigen::Vector2d(0.4, 0.0)})};
    EXPECT_THROW(build_mesh(g), ValidationError);
}

TEST(MeshIo, RoundTripKeepsCracks) {
    const CrackedMesh m = build_mesh(square(4, {path(3, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.75, 0.5)})}));
    // Write the uncracked mesh with explicit crack facets, then read it back.
    std::ostringstream text;
    text << "# produced by a test\nfkv-mesh 1\ndim 2\nnodes 25\n";
    const CrackedMesh plain = build_mesh(square(4));
    for (const auto& p : plain.nodes) text << p.x() << ' ' << p.y() << '\n';
    text << "elements " << plain.num_elements() << '\n';
    for (const auto& e : plain.elements) text << e[0] << ' ' << e[1] << ' ' << e[2] << '\n';
    text << "boundary " << plain.boundary_facets.size() << '\n';
    for (const auto& f : plain.boundary_facets)
        text << f.nodes[0] << ' ' << f.nodes[1] << ' '
             << (f.tag == BoundaryTag::Dirichlet ? "dirichlet" : "neumann") << '\n';
    // Nodes (1,2), (2,2), (3,2) in grid coordinates.
    text << "cracks 2\n11 12 3\n12 13 3\n";
    std::istringstream in(text.str());
    const CrackedMesh r = finalize_mesh(read_mesh(in));
    EXPECT_EQ(r.num_nodes(), m.num_nodes());
    EXPECT_EQ(r.crack_pairs.size(), m.crack_pairs.size());
    EXPECT_EQ(r.crack_pairs[0].segments, std::vector<int>{3});

    std::ostringstream again;
    again << "# header line\n";
    write_mesh(again, r);
    std::istringstream in2(again.str());
    const RawMesh raw = read_mesh(in2);
    EXPECT_EQ(static_cast<int>(raw.nodes.size()), r.num_nodes());
    EXPECT_EQ(raw.elements.size(), r.elements.size());
}

TEST(MeshIo, RejectsMalformedInput) {
    std::istringstream bad1("mesh 1\n");
    EXPECT_THROW(read_mesh(bad1), ValidationError);
    std::istringstream bad2("fkv-mesh 1\ndim 3\n");
    EXPECT_THROW(read_mesh(bad2), ValidationError);
    std::istringstream bad3("fkv-mesh 1\ndim 1\nnodes 2\n0\n1\nelements 1\n0 5\n");
    EXPECT_THROW(finalize_mesh(read_mesh(bad3)), ValidationError);
    std::istringstream bad4("fkv-mesh 1\ndim 1\nnodes 2\n0\n1\nelements 1\n0 1\nfaces 0\n");
    EXPECT_THROW(read_mesh(bad4), ValidationError);
}

TEST(Schedule, ReleaseAtGridPointCountsAsReleased) {
    EXPECT_TRUE(is_released(0.3, 30, 0.01));
    EXPECT_FALSE(is_released(0.3, 29, 0.01));
    EXPECT_TRUE(is_released(0.0, 0, 0.01));
    EXPECT_FALSE(is_released(CrackSchedule::never, 1000000, 0.01));
}

TEST(Schedule, JunctionOpensAtLaterRelease) {
    CrackSchedule s;
    s.release_time = {{0, 0.2}, {1, 0.5}};
    CrackPair p;
    p.segments = {0, 1};
    EXPECT_DOUBLE_EQ(s.pair_release(p), 0.5);
    EXPECT_TRUE(std::isinf(s.release_of(7)));
}

TEST(Schedule, FixedAndMonotone) {
    CrackSchedule s;
    s.release_time = {{0, 0.0}, {1, CrackSchedule::never}};
    EXPECT_TRUE(s.is_fixed(1.0));
    s.release_time[1] = 0.4;
    EXPECT_FALSE(s.is_fixed(1.0));
    EXPECT_TRUE(s.is_fixed(0.3));
    EXPECT_TRUE(check_h3(s));
    s.reglue_time[1] = 0.8;
    EXPECT_FALSE(check_h3(s));
}

TEST(SpaceAt, TiesDropAtRelease) {
    const CrackedMesh m = build_mesh(square(8, {path(0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.75, 0.5)})}));
    CrackSchedule s;
    s.release_time[0] = 0.3;
    const double tau = 0.01;
    const ConstrainedSpace before = space_at(m, s, 29, tau);
    const ConstrainedSpace after = space_at(m, s, 30, tau);
    EXPECT_EQ(before.tie_constraints.size(), 3u);
    EXPECT_TRUE(after.tie_constraints.empty());
    EXPECT_EQ(after.num_free(), before.num_free() + 6);
    EXPECT_THROW(space_at(m, s, -1, tau), DomainError);
}

TEST(SpaceAt, GluedSpaceMatchesUncrackedNumbering) {
    const CrackedMesh cracked = build_mesh(square(8, {path(0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.75, 0.5)})}));
    const CrackedMesh plain = build_mesh(square(8));
    CrackSchedule s;
    s.release_time[0] = CrackSchedule::never;
    const ConstrainedSpace a = space_at(cracked, s, 5, 0.1);
    const ConstrainedSpace b = space_at(plain, {}, 5, 0.1);
    EXPECT_EQ(a.num_free(), b.num_free());
    for (int d = 0; d < plain.ndof(); ++d) EXPECT_EQ(a.dof_map[d], b.dof_map[d]);
}

TEST(SpaceAt, ProlongationAndMembership) {
    const CrackedMesh m = build_mesh(square(4, {path(0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.75, 0.5)})}));
    CrackSchedule s;
    s.release_time[0] = 1.0;
    const ConstrainedSpace sp = space_at(m, s, 0, 0.1);
    const Eigen::SparseMatrix<double> p = sp.prolongation();
    EXPECT_EQ(p.rows(), m.ndof());
    EXPECT_EQ(p.cols(), sp.num_free());
    const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(sp.num_free(), 1.0, 2.0);
    const Eigen::VectorXd v = sp.expand(w);
    EXPECT_TRUE(v.isApprox(p * w));
    EXPECT_TRUE(sp.contains(v));
    for (int d : sp.dirichlet_dofs) EXPECT_EQ(v[d], 0.0);
    Eigen::VectorXd broken = v;
    broken[m.crack_pairs[0].minus * 2] += 1.0;
    EXPECT_FALSE(sp.contains(broken));
    EXPECT_TRUE(sp.restrict_dual(v).isApprox(Eigen::VectorXd(p.transpose() * v)));
}

TEST(SpaceAtProperty, ConstraintSetsShrinkForRandomSchedules) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.2);
    const CrackedMesh m = build_mesh(square(8, {path(0, {Eigen::Vector2d(0.25, 0.5), Eigen::Vector2d(0.5, 0.5)}),
                                                path(1, {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.75, 0.5)})}));
    for (int trial = 0; trial < 50; ++trial) {
        CrackSchedule s;
        s.release_time = {{0, u(rng)}, {1, u(rng)}};
        const int n = 40;
        std::set<int> prev;
        for (int j = 0; j <= n; ++j) {
            const ConstrainedSpace sp = space_at(m, s, j, 1.0 / n);
            std::set<int> ties(sp.tie_constraints.begin(), sp.tie_constraints.end());
            if (j > 0) EXPECT_TRUE(std::includes(prev.begin(), prev.end(), ties.begin(), ties.end()));
            prev = std::move(ties);
        }
    }
}
