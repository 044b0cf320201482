#include "latmet/linearize.hpp"

#include "latmet/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace latmet;

namespace {

CellSet single_cell() {
    CellSet w;
    w.offsets = {{0, 0}};
    return w;
}

CellSet block(int k) {
    CellSet w;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) w.offsets.push_back({i, j});
    return w;
}

Mat2 random_matrix(Rng& rng, double scale) {
    Mat2 m;
    m << rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale),
        rng.uniform(-scale, scale);
    return m;
}

LatticeSpec ghost_square() {
    LatticeDef def;
    def.name = "ghost-square";
    def.cell_vectors = Mat2::Identity();
    def.basic_nodes = {Vec2(0, 0)};
    def.springs = {{NodeRef{0, {0, 0}}, NodeRef{0, {1, 0}}, -1, 1, 0.5},
                   {NodeRef{0, {0, 0}}, NodeRef{0, {0, 1}}, -1, 1, 0.5},
                   {NodeRef{0, {1, 0}}, NodeRef{0, {1, 1}}, -1, 1, 0.5},
                   {NodeRef{0, {0, 1}}, NodeRef{0, {1, 1}}, -1, 1, 0.5}};
    // Center ghost (1/2,1/2) = (z1 + z2)/2 with z1 = (0,0), z2 = (1,1).
    def.ghosts = {{{{0.5, NodeRef{0, {0, 0}}}, {0.5, NodeRef{0, {1, 1}}}}}};
    def.triangles = {{VertexRef::of_node({0, {0, 0}}), VertexRef::of_node({0, {1, 0}}),
                      VertexRef::of_ghost(0)},
                     {VertexRef::of_node({0, {1, 0}}), VertexRef::of_node({0, {1, 1}}),
                      VertexRef::of_ghost(0)},
                     {VertexRef::of_node({0, {1, 1}}), VertexRef::of_node({0, {0, 1}}),
                      VertexRef::of_ghost(0)},
                     {VertexRef::of_node({0, {0, 1}}), VertexRef::of_node({0, {0, 0}}),
                      VertexRef::of_ghost(0)}};
    def.penalty_triangles = {0, 1, 2, 3};
    return build_lattice(def);
}

}  // namespace

TEST_SUITE("linearize") {

TEST_CASE("affine nodal data linearizes to the same affine map") {
    for (const auto& entry : catalog_entries()) {
        const LatticeSpec spec = catalog(entry.name);
        Mat2 l;
        l << 2, 0, 0, 2;
        const Deformation def = sample_at_nodes([&](const Vec2& x) { return Vec2(l * x); },
                                                single_cell(), spec, 1.0);
        const PiecewiseLinearField field = linearize(def, spec);
        for (const TriAffine& t : field.tris) {
            CHECK((t.A - l).norm() < 1e-12);
            CHECK(t.b.norm() < 1e-12);
        }
    }
}

TEST_CASE("constant nodal data gives zero gradient everywhere") {
    const LatticeSpec spec = catalog("kagome");
    const Deformation def = sample_at_nodes([](const Vec2&) { return Vec2(3.5, -1.25); },
                                            block(2), spec, 1.0);
    const PiecewiseLinearField field = linearize(def, spec);
    for (const TriAffine& t : field.tris) CHECK(t.A.norm() < 1e-14);
    CHECK(l2_gradient_norm_sq(field) == doctest::Approx(0.0));
}

TEST_CASE("ghost vertex values follow the convex rule") {
    const LatticeSpec spec = ghost_square();
    Deformation def;
    def.window = single_cell();
    def.epsilon = 1;
    def.set({0, {0, 0}}, Vec2(0, 0));
    def.set({0, {1, 0}}, Vec2(1, 0));
    def.set({0, {0, 1}}, Vec2(0, 1));
    def.set({0, {1, 1}}, Vec2(2, 0));
    const PiecewiseLinearField field = linearize(def, spec);
    // Ghost value = (u(z1) + u(z2))/2 = (1, 0); evaluate tri 0 at the ghost point.
    const Vec2 at_ghost = field.evaluate(0, 0, Vec2(0.5, 0.5));
    CHECK((at_ghost - Vec2(1, 0)).norm() < 1e-14);
}

TEST_CASE("affine preservation through ghost rules, 100 random maps") {
    const LatticeSpec spec = ghost_square();
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Mat2 l = random_matrix(rng, 3.0);
        const Vec2 c(rng.uniform(-1, 1), rng.uniform(-1, 1));
        const Deformation def = sample_at_nodes(
            [&](const Vec2& x) { return Vec2(l * x + c); }, single_cell(), spec, 1.0);
        const PiecewiseLinearField field = linearize(def, spec);
        for (const TriAffine& t : field.tris) {
            CHECK((t.A - l).norm() <= 1e-12 * std::max(1.0, l.norm()));
            CHECK((t.b - c).norm() <= 1e-12 * std::max(1.0, c.norm()));
        }
    }
}

TEST_CASE("gradient_on_triangle on explicit vertex data") {
    const std::array<Vec2, 3> x = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};

    SUBCASE("stretch") {
        const Mat2 g = p1_gradient(x, {Vec2(0, 0), Vec2(2, 0), Vec2(0, 3)});
        CHECK(g(0, 0) == doctest::Approx(2));
        CHECK(g(1, 1) == doctest::Approx(3));
        CHECK(std::abs(g(0, 1)) < 1e-14);
        CHECK(std::abs(g(1, 0)) < 1e-14);
    }
    SUBCASE("rigid rotation") {
        const Mat2 r = rotation(0.7);
        const Mat2 g = p1_gradient(x, {r * x[0], r * x[1], r * x[2]});
        CHECK((g - r).norm() < 1e-14);
    }
    SUBCASE("random affine property") {
        Rng rng(11);
        for (int trial = 0; trial < 200; ++trial) {
            const Mat2 l = random_matrix(rng, 2.0);
            const Mat2 g = p1_gradient(x, {l * x[0], l * x[1], l * x[2]});
            CHECK((g - l).norm() <= 1e-12 * std::max(1.0, l.norm()));
        }
    }
}

TEST_CASE("degenerate triangles are rejected") {
    CHECK_THROWS(p1_gradient({Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)},
                             {Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)}));
}

TEST_CASE("l2 gradient norm of an affine field equals |lambda|^2 |window|") {
    const LatticeSpec spec = catalog("square");
    Mat2 l;
    l << 1.5, -0.25, 0.75, 2.0;
    const Deformation def = sample_at_nodes([&](const Vec2& x) { return Vec2(l * x); },
                                            single_cell(), spec, 1.0);
    CHECK(l2_gradient_norm_sq(linearize(def, spec)) == doctest::Approx(l.squaredNorm()));
}

TEST_CASE("two-triangle field sums area-weighted squared gradients") {
    const LatticeSpec spec = catalog("square");
    Deformation def;
    def.window = single_cell();
    def.epsilon = 1;
    def.set({0, {0, 0}}, Vec2(0, 0));
    def.set({0, {1, 0}}, Vec2(1.2, 0.1));
    def.set({0, {0, 1}}, Vec2(-0.3, 0.9));
    def.set({0, {1, 1}}, Vec2(1.4, 1.1));
    const PiecewiseLinearField field = linearize(def, spec);
    const Mat2 g0 = gradient_on_triangle(field, 0, 0);
    const Mat2 g1 = gradient_on_triangle(field, 0, 1);
    const double expect = 0.5 * g0.squaredNorm() + 0.5 * g1.squaredNorm();
    CHECK(l2_gradient_norm_sq(field) == doctest::Approx(expect));
}

TEST_CASE("field is continuous across shared edges and ordering-independent") {
    const LatticeSpec spec = catalog("kagome");
    Deformation def = sample_at_nodes(
        [&](const Vec2& x) { return Vec2(0.9 * x + Vec2(0.05 * std::sin(3 * x.x()), 0)); },
        block(2), spec, 1.0);
    const PiecewiseLinearField field = linearize(def, spec);
    const size_t ntri = spec.triangles.size();
    // Any two triangles sharing an edge must agree at the shared midpoint.
    for (size_t c1 = 0; c1 < field.window.offsets.size(); ++c1)
        for (size_t t1 = 0; t1 < ntri; ++t1)
            for (size_t c2 = c1; c2 < field.window.offsets.size(); ++c2)
                for (size_t t2 = 0; t2 < ntri; ++t2) {
                    const TriAffine& a = field.at(c1, int(t1));
                    const TriAffine& b = field.at(c2, int(t2));
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j) {
                            const Vec2 mid_a = 0.5 * (a.x[size_t(i)] + a.x[size_t((i + 1) % 3)]);
                            const Vec2 mid_b = 0.5 * (b.x[size_t(j)] + b.x[size_t((j + 1) % 3)]);
                            if ((mid_a - mid_b).norm() > 1e-12) continue;
                            const Vec2 va = a.A * mid_a + a.b;
                            const Vec2 vb = b.A * mid_b + b.b;
                            CHECK((va - vb).norm() < 1e-11);
                        }
                }
}

TEST_CASE("scaling covariance of the linearization") {
    const LatticeSpec spec = catalog("kagome");
    auto u = [](const Vec2& x) {
        return Vec2(1.1 * x.x() + 0.2 * x.y() + 0.3, -0.4 * x.x() + 0.8 * x.y());
    };
    const double eps = 0.25;
    // eps * u(x / eps) sampled on the eps-lattice vs the unscaled field.
    const Deformation scaled = sample_at_nodes(
        [&](const Vec2& x) { return Vec2(eps * u(x / eps)); }, single_cell(), spec, eps);
    const Deformation unit = sample_at_nodes(u, single_cell(), spec, 1.0);
    const PiecewiseLinearField fs = linearize(scaled, spec);
    const PiecewiseLinearField fu = linearize(unit, spec);
    for (size_t t = 0; t < spec.triangles.size(); ++t) {
        const TriAffine& a = fs.at(0, int(t));
        const TriAffine& b = fu.at(0, int(t));
        CHECK((a.A - b.A).norm() <= 1e-12);
        // Values match under x -> x/eps: a(x) = eps * b(x/eps).
        const Vec2 probe = (a.x[0] + a.x[1] + a.x[2]) / 3.0;
        const Vec2 va = a.A * probe + a.b;
        const Vec2 vb = eps * (b.A * (probe / eps) + b.b);
        CHECK((va - vb).norm() <= 1e-12);
    }
}

TEST_CASE("missing node value without an extension rule throws") {
    const LatticeSpec spec = catalog("square");
    Deformation def;
    def.window = single_cell();
    def.epsilon = 1;
    def.set({0, {0, 0}}, Vec2(0, 0));
    CHECK_THROWS_AS(linearize(def, spec), MissingNodeValue);

    def.extension = ExtensionRule::zero();
    CHECK_NOTHROW(linearize(def, spec));

    Mat2 l;
    l << 1, 0, 0, 1;
    def.extension = ExtensionRule::affine(l);
    const PiecewiseLinearField field = linearize(def, spec);
    CHECK((gradient_on_triangle(field, 0, 0) - l).norm() < 1e-12);
}

TEST_CASE("interpolation report: affine and constant functions are exact") {
    const LatticeSpec spec = catalog("kagome");
    const Domain box = Domain::box(Vec2(0, 0), Vec2(3, 3));
    Mat2 l;
    l << 2, 0.5, -1, 1;
    const InterpolationReport affine = interpolation_estimate_report(
        [&](const Vec2& x) { return Vec2(l * x + Vec2(0.1, 0.2)); }, l.norm(), spec,
        {0.25, 0.125}, box);
    for (double r : affine.gradient_ratio) CHECK(r <= 1.0 + 1e-12);
    for (double r : affine.error_ratio) CHECK(r <= 1e-12);

    const InterpolationReport constant = interpolation_estimate_report(
        [](const Vec2&) { return Vec2(1, 2); }, 0.0, spec, {0.25, 0.125}, box);
    for (double r : constant.error_ratio) CHECK(r == 0.0);
}

TEST_CASE("interpolation constants are stable under eps halving for a crease") {
    const LatticeSpec spec = catalog("kagome");
    const Domain box = Domain::box(Vec2(0, 0), Vec2(3, 3));
    // Crease at x = 1, commensurate with the lattice pitch at every halving,
    // so the measured constant is phase-stable.
    const InterpolationReport rep = interpolation_estimate_report(
        [](const Vec2& x) { return Vec2(std::abs(x.x() - 1.0), 0); }, 1.0, spec,
        {0.25, 0.125, 0.0625}, box);
    for (double r : rep.gradient_ratio) {
        CHECK(r >= 1.0 - 1e-12);
        CHECK(r <= 4.0);
    }
    CHECK(std::abs(rep.gradient_ratio_slope) <= 0.1);
    CHECK(std::abs(rep.error_ratio_slope) <= 0.1);
}

TEST_CASE("field CSV export carries one row per triangle") {
    const LatticeSpec spec = catalog("square");
    const Deformation def = sample_at_nodes([](const Vec2& x) { return x; }, block(2), spec, 0.5);
    const std::string csv = field_to_csv(linearize(def, spec));
    const size_t rows = size_t(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(rows == 1 + 4 * spec.triangles.size());
}

}  // TEST_SUITE
