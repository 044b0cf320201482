#include "latmet/lattice.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace latmet;

namespace {

const double kRt3 = std::sqrt(3.0);

LatticeDef minimal_square_def() {
    LatticeDef def;
    def.name = "minsq";
    def.cell_vectors = Mat2::Identity();
    def.basic_nodes = {Vec2(0, 0)};
    def.springs = {{NodeRef{0, {0, 0}}, NodeRef{0, {1, 0}}, -1, 1, 0.5},
                   {NodeRef{0, {0, 0}}, NodeRef{0, {0, 1}}, -1, 1, 0.5},
                   {NodeRef{0, {1, 0}}, NodeRef{0, {1, 1}}, -1, 1, 0.5},
                   {NodeRef{0, {0, 1}}, NodeRef{0, {1, 1}}, -1, 1, 0.5}};
    def.triangles = {{VertexRef::of_node({0, {0, 0}}), VertexRef::of_node({0, {1, 0}}),
                      VertexRef::of_node({0, {1, 1}})},
                     {VertexRef::of_node({0, {0, 0}}), VertexRef::of_node({0, {0, 1}}),
                      VertexRef::of_node({0, {1, 1}})}};
    def.penalty_triangles = {0, 1};
    return def;
}

std::set<std::array<int, 2>> offset_set(const CellSet& cs) {
    return {cs.offsets.begin(), cs.offsets.end()};
}

}  // namespace

TEST_SUITE("lattice") {

TEST_CASE("square catalog lattice builds with half-weight springs") {
    const LatticeSpec spec = catalog("square");
    CHECK(spec.basic_nodes.size() == 1);
    CHECK(spec.springs.size() == 4);
    for (const auto& s : spec.springs) {
        CHECK(s.weight == doctest::Approx(0.5));
        CHECK(s.rest_length == doctest::Approx(1.0));
    }
    CHECK(spec.triangles.size() == 2);
    CHECK(spec.cell_volume == doctest::Approx(1.0));
}

TEST_CASE("kagome catalog lattice has six unit springs") {
    const LatticeSpec spec = catalog("kagome");
    CHECK(spec.basic_nodes.size() == 3);
    CHECK(spec.springs.size() == 6);
    for (const auto& s : spec.springs) CHECK(s.rest_length == doctest::Approx(1.0));
    CHECK(spec.cell_volume == doctest::Approx(2 * kRt3));
    CHECK(spec.penalty_triangles.size() == 2);
}

TEST_CASE("rotating-squares catalog lattice has ten springs") {
    const LatticeSpec spec = catalog("rotating-squares");
    CHECK(spec.springs.size() == 10);
    CHECK(spec.triangles.size() == 8);
    CHECK(spec.penalty_triangles.size() == 4);
    int diagonals = 0;
    for (const auto& s : spec.springs)
        if (std::abs(s.rest_length - std::sqrt(2.0)) < 1e-12) ++diagonals;
    CHECK(diagonals == 2);
}

TEST_CASE("duplicate node modulo lattice is rejected") {
    LatticeDef def = minimal_square_def();
    def.basic_nodes = {Vec2(0, 0), Vec2(1, 0)};  // second node = first + v1
    CHECK_THROWS_WITH_AS(build_lattice(def),
                         doctest::Contains("duplicate node modulo lattice"), LatticeError);
}

TEST_CASE("degenerate cell vectors are rejected") {
    LatticeDef def = minimal_square_def();
    def.cell_vectors << 1, 2, 1, 2;
    CHECK_THROWS_AS(build_lattice(def), LatticeError);
}

TEST_CASE("non-convex ghost rule is rejected") {
    LatticeDef def = minimal_square_def();
    def.ghosts = {{{{0.7, NodeRef{0, {0, 0}}}, {0.7, NodeRef{0, {1, 1}}}}}};
    def.triangles = {{VertexRef::of_node({0, {0, 0}}), VertexRef::of_node({0, {1, 0}}),
                      VertexRef::of_ghost(0)},
                     {VertexRef::of_node({0, {1, 0}}), VertexRef::of_node({0, {1, 1}}),
                      VertexRef::of_ghost(0)},
                     {VertexRef::of_node({0, {1, 1}}), VertexRef::of_node({0, {0, 1}}),
                      VertexRef::of_ghost(0)},
                     {VertexRef::of_node({0, {0, 1}}), VertexRef::of_node({0, {0, 0}}),
                      VertexRef::of_ghost(0)}};
    def.penalty_triangles = {};
    CHECK_THROWS_WITH_AS(build_lattice(def), doctest::Contains("convex combination"),
                         LatticeError);
}

TEST_CASE("triangulation gaps and overlaps are rejected") {
    LatticeDef def = minimal_square_def();
    def.triangles.pop_back();  // half the cell is uncovered
    def.penalty_triangles = {0};
    CHECK_THROWS_WITH_AS(build_lattice(def), doctest::Contains("gap/overlap"), LatticeError);
}

TEST_CASE("penalty set outside the cell's triangulation is rejected") {
    LatticeDef def = minimal_square_def();
    def.penalty_triangles = {0, 5};
    CHECK_THROWS_AS(build_lattice(def), LatticeError);
}

TEST_CASE("node_position applies offsets and scaling") {
    const LatticeSpec square = catalog("square");
    CHECK(node_position(square, {0, {2, 3}}, 1.0) == Vec2(2, 3));

    const LatticeSpec kag = catalog("kagome");
    const Vec2 o_half = node_position(kag, {1, {0, 0}}, 0.5);
    CHECK(o_half.x() == doctest::Approx(0.25));
    CHECK(o_half.y() == doctest::Approx(kRt3 / 4));

    // Offset (1,1) adds v1 + v2 = (3, sqrt(3)).
    const Vec2 o_off = node_position(kag, {1, {1, 1}}, 1.0);
    CHECK(o_off.x() == doctest::Approx(0.5 + 3.0));
    CHECK(o_off.y() == doctest::Approx(kRt3 / 2 + kRt3));

    CHECK_THROWS_AS(node_position(square, {3, {0, 0}}, 1.0), LatticeError);
}

TEST_CASE("reach of the catalog lattices") {
    const LatticeSpec kag = catalog("kagome");
    CHECK(kag.reach.n == 1);
    CHECK(kag.reach.m == 1);
    CHECK(kag.reach.d_m == doctest::Approx(std::sqrt(7.0)));  // 2 x sqrt(3) rectangle diagonal

    const LatticeSpec lr = catalog("square-long-range");
    CHECK(lr.reach.n == 2);
    CHECK(lr.reach.m == 2);

    const LatticeSpec sq = catalog("square");
    CHECK(sq.reach.n == 1);
    CHECK(sq.reach.m == 1);
    CHECK(sq.reach.d_m == doctest::Approx(std::sqrt(2.0)));

    CHECK(catalog("rotating-squares").reach.n == 1);
}

TEST_CASE("compute_reach is idempotent and n <= m") {
    for (const auto& entry : catalog_entries()) {
        const LatticeSpec spec = catalog(entry.name);
        const Reach again = compute_reach(spec);
        CHECK(again.n == spec.reach.n);
        CHECK(again.m == spec.reach.m);
        CHECK(again.d_m == doctest::Approx(spec.reach.d_m));
        CHECK(spec.reach.n <= spec.reach.m);
    }
}

TEST_CASE("ghost sources outside the cell push m beyond n") {
    LatticeDef def = minimal_square_def();
    // Center ghost written through nodes of neighboring cells: (1/2,1/2) =
    // ((2,1) + (-1,0)) / 2.
    def.ghosts = {{{{0.5, NodeRef{0, {2, 1}}}, {0.5, NodeRef{0, {-1, 0}}}}}};
    def.triangles = {{VertexRef::of_node({0, {0, 0}}), VertexRef::of_node({0, {1, 0}}),
                      VertexRef::of_ghost(0)},
                     {VertexRef::of_node({0, {1, 0}}), VertexRef::of_node({0, {1, 1}}),
                      VertexRef::of_ghost(0)},
                     {VertexRef::of_node({0, {1, 1}}), VertexRef::of_node({0, {0, 1}}),
                      VertexRef::of_ghost(0)},
                     {VertexRef::of_node({0, {0, 1}}), VertexRef::of_node({0, {0, 0}}),
                      VertexRef::of_ghost(0)}};
    def.penalty_triangles = {};
    const LatticeSpec spec = build_lattice(def);
    CHECK(spec.reach.n == 1);
    CHECK(spec.reach.m == 2);
}

TEST_CASE("cells_in_domain on the unit box at eps = 1/4") {
    const LatticeSpec sq = catalog("square");
    const Domain box = Domain::box(Vec2(0, 0), Vec2(1, 1));
    const CellSet cells = cells_in_domain(sq, box, 0.25);

    // Independent oracle: enumerate all 16 candidate cells and test strict
    // inclusion of the closed cell [k1,k1+1]x[k2,k2+1] (in eps steps).
    std::set<std::array<int, 2>> expected;
    for (int k1 = 0; k1 < 4; ++k1)
        for (int k2 = 0; k2 < 4; ++k2) {
            const double x0 = 0.25 * k1, x1 = 0.25 * (k1 + 1);
            const double y0 = 0.25 * k2, y1 = 0.25 * (k2 + 1);
            if (x0 > 0 && y0 > 0 && x1 < 1 && y1 < 1) expected.insert({k1, k2});
        }
    CHECK(expected == std::set<std::array<int, 2>>{{1, 1}, {1, 2}, {2, 1}, {2, 2}});
    CHECK(offset_set(cells) == expected);
}

TEST_CASE("oversized epsilon yields an empty cell set") {
    for (const auto& entry : catalog_entries()) {
        const LatticeSpec spec = catalog(entry.name);
        CHECK(cells_in_domain(spec, Domain::box(Vec2(0, 0), Vec2(1, 1)), 10.0).offsets.empty());
    }
}

TEST_CASE("kagome cell count matches brute-force enumeration") {
    const LatticeSpec kag = catalog("kagome");
    const Domain box = Domain::box(Vec2(0, 0), Vec2(8, 4 * kRt3));  // 4x4 cells of size 2 x rt3
    const CellSet cells = cells_in_domain(kag, box, 1.0);

    // Brute force over a generous grid with the same strict-inclusion rule.
    int count = 0;
    const double tol = 1e-12 * box.diameter();
    for (int a = -10; a <= 10; ++a)
        for (int b = -10; b <= 10; ++b) {
            const Vec2 shift = kag.cell_vectors * Vec2(a, b);
            bool inside = true;
            for (const Vec2& c : kag.um_corners)
                if (box.inside_distance(c + shift) <= tol) inside = false;
            if (inside) ++count;
        }
    CHECK(count == int(cells.offsets.size()));
    CHECK(count > 0);
}

TEST_CASE("cells_in_domain is monotone in the domain") {
    const LatticeSpec kag = catalog("kagome");
    const Domain small = Domain::box(Vec2(0.3, 0.2), Vec2(6.1, 5.9));
    const Domain big = Domain::box(Vec2(0.1, 0.0), Vec2(6.5, 6.2));
    const auto s = offset_set(cells_in_domain(kag, small, 0.5));
    const auto b = offset_set(cells_in_domain(kag, big, 0.5));
    for (const auto& off : s) CHECK(b.count(off) == 1);
}

TEST_CASE("translating the domain by a lattice period translates the cell set") {
    for (const std::string name : {"square", "kagome", "square-long-range"}) {
        const LatticeSpec spec = catalog(name);
        const double eps = 0.25;
        const Domain base = Domain::box(Vec2(0.07, 0.11), Vec2(3.13, 2.89));
        for (int axis = 0; axis < 2; ++axis) {
            const Vec2 shift = eps * Vec2(spec.cell_vectors.col(axis));
            const auto moved = cells_in_domain(spec, base.translated(shift), eps);
            const auto orig = cells_in_domain(spec, base, eps);
            REQUIRE(orig.offsets.size() == moved.offsets.size());
            std::set<std::array<int, 2>> expect;
            for (auto off : orig.offsets) {
                off[size_t(axis)] += 1;
                expect.insert(off);
            }
            CHECK(offset_set(moved) == expect);
        }
    }
}

TEST_CASE("covered volume converges to the domain volume") {
    const Domain box = Domain::box(Vec2(0, 0), Vec2(1, 1));
    for (const auto& entry : catalog_entries()) {
        const LatticeSpec spec = catalog(entry.name);
        // Excluded cells live in a boundary band of width ~ eps * (d_m + diam U).
        const double diam_u = spec.cell.corners()[0].norm() + spec.cell.edges.norm();
        const double c = 2.0 * 4.0 * (spec.reach.d_m + diam_u);
        double prev_gap = std::numeric_limits<double>::infinity();
        for (double eps : {0.25, 0.125, 0.0625}) {
            const CellSet cells = cells_in_domain(spec, box, eps);
            const double covered = double(cells.offsets.size()) * eps * eps * spec.cell_volume;
            const double gap = std::abs(box.area() - covered);
            CHECK(gap <= c * eps);
            CHECK(gap <= prev_gap + 1e-12);
            prev_gap = gap;
        }
    }
}

TEST_CASE("lattice definition files round-trip the kagome geometry") {
    const std::string text = R"json({
      "name": "kagome-file", "dimension": 2,
      "cell_vectors": [[2,0],[1,1.7320508075688772]],
      "cell_shape": {"origin": [0,0], "edges": [[2,0],[0,1.7320508075688772]]},
      "nodes": [[1,0],[0.5,0.8660254037844386],[1,1.7320508075688772]],
      "springs": [
        {"endpoints": [[1,[0,0]],[2,[0,0]]]},
        {"endpoints": [[3,[0,-1]],[2,[0,0]]]},
        {"endpoints": [[1,[-1,1]],[2,[0,0]]]},
        {"endpoints": [[3,[0,0]],[2,[0,0]]]},
        {"endpoints": [[1,[0,0]],[3,[1,-1]]]},
        {"endpoints": [[3,[0,0]],[1,[0,1]]]}
      ],
      "triangles": [
        [[1,[0,0]],[2,[0,0]],[3,[0,-1]]],
        [[3,[0,-1]],[2,[0,0]],[1,[-1,1]]],
        [[1,[-1,1]],[2,[0,0]],[3,[0,0]]],
        [[1,[0,0]],[2,[0,0]],[3,[1,-1]]],
        [[3,[0,0]],[2,[0,0]],[3,[1,-1]]],
        [[3,[0,0]],[1,[0,1]],[3,[1,-1]]]
      ],
      "penalty_triangles": [0, 2],
      "eta": 0.01
    })json";
    const LatticeSpec spec = build_lattice(lattice_def_from_json_text(text));
    CHECK(spec.springs.size() == 6);
    CHECK(spec.reach.n == 1);
    CHECK(spec.reach.m == 1);
    for (const auto& s : spec.springs) CHECK(s.rest_length == doctest::Approx(1.0));
}

}  // TEST_SUITE
