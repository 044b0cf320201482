#include "latmet/lattice.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace latmet {

namespace {

constexpr double kGeomTol = 1e-9;

std::string ref_str(const NodeRef& r) {
    std::ostringstream os;
    os << "(" << r.basic + 1 << ",[" << r.offset[0] << "," << r.offset[1] << "])";
    return os.str();
}

}  // namespace

double CellShape::inside_distance(const Vec2& p) const {
    auto cs = corners();
    std::vector<Vec2> poly(cs.begin(), cs.end());
    if (triangle_signed_area(poly[0], poly[1], poly[2]) < 0)
        std::reverse(poly.begin(), poly.end());
    double dist = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < 4; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % 4];
        const Vec2 e = b - a;
        dist = std::min(dist, (e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x())) / e.norm());
    }
    return dist;
}

double LatticeSpec::penalty_ceiling() const {
    double m = 0;
    for (int t : penalty_triangles) {
        double w = 1.0;
        if (penalty_weighting == PenaltyWeighting::AreaWeighted) {
            const auto& tri = triangles[size_t(t)];
            const Vec2 a = vertex_position(tri.v[0], {0, 0}, 1.0);
            const Vec2 b = vertex_position(tri.v[1], {0, 0}, 1.0);
            const Vec2 c = vertex_position(tri.v[2], {0, 0}, 1.0);
            w = std::abs(triangle_signed_area(a, b, c));
        }
        m += w / eta;
    }
    return m;
}

Vec2 node_position(const LatticeSpec& spec, const NodeRef& ref, double epsilon) {
    if (ref.basic < 0 || size_t(ref.basic) >= spec.basic_nodes.size())
        throw LatticeError("node_position: basic_index out of range");
    const Vec2 p = spec.basic_nodes[size_t(ref.basic)] +
                   spec.cell_vectors * Vec2(double(ref.offset[0]), double(ref.offset[1]));
    return epsilon * p;
}

Vec2 LatticeSpec::vertex_position(const VertexRef& v, const std::array<int, 2>& cell_offset,
                                  double epsilon) const {
    if (v.kind == VertexRef::Kind::Node)
        return node_position(*this, v.node.shifted(cell_offset), epsilon);
    const GhostRule& rule = ghosts.at(size_t(v.ghost));
    Vec2 p = Vec2::Zero();
    for (const auto& [w, src] : rule.terms)
        p += w * node_position(*this, src.shifted(cell_offset), epsilon);
    return p;
}

namespace {

bool in_expanded_cell(const LatticeSpec& spec, const Vec2& pos, int n, double tol) {
    for (int a = -(n - 1); a <= n - 1; ++a)
        for (int b = -(n - 1); b <= n - 1; ++b) {
            const Vec2 shift = spec.cell_vectors * Vec2(double(a), double(b));
            if (spec.cell.inside_distance(pos - shift) >= -tol) return true;
        }
    return false;
}

int min_reach_for(const LatticeSpec& spec, const Vec2& pos, double tol) {
    for (int n = 1; n <= 16; ++n)
        if (in_expanded_cell(spec, pos, n, tol)) return n;
    throw LatticeError("compute_reach: node farther than 16 cells from the unit cell");
}

}  // namespace

Reach compute_reach(const LatticeSpec& spec) {
    const double tol = kGeomTol * std::max(1.0, spec.cell_vectors.norm());
    int n = 1;
    auto absorb = [&](const Vec2& pos) { n = std::max(n, min_reach_for(spec, pos, tol)); };
    for (const auto& s : spec.springs) {
        absorb(node_position(spec, s.a, 1.0));
        absorb(node_position(spec, s.b, 1.0));
    }
    for (const auto& a : spec.angle_terms) {
        absorb(node_position(spec, a.apex, 1.0));
        absorb(node_position(spec, a.arm1, 1.0));
        absorb(node_position(spec, a.arm2, 1.0));
    }
    for (int t : spec.penalty_triangles)
        for (const auto& v : spec.triangles[size_t(t)].v)
            absorb(spec.vertex_position(v, {0, 0}, 1.0));

    // m: ghost-rule sources for triangulation vertices anywhere in U_n.
    int m = n;
    for (int a = -(n - 1); a <= n - 1; ++a)
        for (int b = -(n - 1); b <= n - 1; ++b)
            for (const auto& tri : spec.triangles)
                for (const auto& v : tri.v) {
                    if (v.kind != VertexRef::Kind::Ghost) continue;
                    for (const auto& [w, src] : spec.ghosts[size_t(v.ghost)].terms) {
                        const Vec2 pos = node_position(spec, src.shifted({a, b}), 1.0);
                        m = std::max(m, min_reach_for(spec, pos, tol));
                    }
                }

    Reach r;
    r.n = n;
    r.m = m;
    std::vector<Vec2> corners;
    for (int a = -(m - 1); a <= m - 1; ++a)
        for (int b = -(m - 1); b <= m - 1; ++b) {
            const Vec2 shift = spec.cell_vectors * Vec2(double(a), double(b));
            for (const Vec2& c : spec.cell.corners()) corners.push_back(c + shift);
        }
    double d = 0;
    for (size_t i = 0; i < corners.size(); ++i)
        for (size_t j = i + 1; j < corners.size(); ++j)
            d = std::max(d, (corners[i] - corners[j]).norm());
    r.d_m = d;
    return r;
}

LatticeSpec build_lattice(const LatticeDef& def) {
    if (def.dimension != 2)
        throw LatticeError("build_lattice: only dimension 2 is implemented");
    LatticeSpec spec;
    spec.name = def.name;
    spec.cell_vectors = def.cell_vectors;
    spec.basic_nodes = def.basic_nodes;
    spec.springs = def.springs;
    spec.angle_terms = def.angle_terms;
    spec.ghosts = def.ghosts;
    spec.triangles = def.triangles;
    spec.penalty_triangles = def.penalty_triangles;
    spec.penalty_weighting = def.penalty_weighting;
    spec.eta = def.eta;

    const double det = def.cell_vectors.determinant();
    if (std::abs(det) < 1e-12)
        throw LatticeError("build_lattice: degenerate cell vectors (zero determinant)");
    spec.cell_volume = std::abs(det);
    spec.cell = def.has_cell_shape ? def.cell_shape
                                   : CellShape{Vec2::Zero(), def.cell_vectors};
    if (std::abs(std::abs(spec.cell.edges.determinant()) - spec.cell_volume) >
        kGeomTol * spec.cell_volume)
        throw LatticeError("build_lattice: cell shape area differs from |det[v1 v2]|");

    if (spec.basic_nodes.empty()) throw LatticeError("build_lattice: no basic nodes");
    if (def.eta <= 0) throw LatticeError("build_lattice: eta must be positive");

    // No two basic nodes may be lattice translates of one another.
    const Mat2 vinv = spec.cell_vectors.inverse();
    for (size_t i = 0; i < spec.basic_nodes.size(); ++i)
        for (size_t j = i + 1; j < spec.basic_nodes.size(); ++j) {
            const Vec2 s = vinv * (spec.basic_nodes[i] - spec.basic_nodes[j]);
            if (std::abs(s.x() - std::round(s.x())) < kGeomTol &&
                std::abs(s.y() - std::round(s.y())) < kGeomTol)
                throw LatticeError("build_lattice: duplicate node modulo lattice (nodes " +
                                   std::to_string(i + 1) + " and " + std::to_string(j + 1) + ")");
        }

    auto check_ref = [&](const NodeRef& r, const char* where) {
        if (r.basic < 0 || size_t(r.basic) >= spec.basic_nodes.size())
            throw LatticeError(std::string("build_lattice: ") + where +
                               " references invalid basic index " + ref_str(r));
    };

    for (auto& g : spec.ghosts) {
        if (g.terms.empty()) throw LatticeError("build_lattice: empty ghost rule");
        double sum = 0;
        for (auto& [w, src] : g.terms) {
            check_ref(src, "ghost rule");
            if (!(w > 0.0) || !(w < 1.0))
                throw LatticeError("build_lattice: ghost rule is not a convex combination "
                                   "(coefficient outside (0,1))");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw LatticeError("build_lattice: ghost rule is not a convex combination "
                               "(coefficients do not sum to 1)");
    }

    for (auto& s : spec.springs) {
        check_ref(s.a, "spring");
        check_ref(s.b, "spring");
        if (s.a == s.b) throw LatticeError("build_lattice: spring with coincident endpoints");
        const double ref_len = (node_position(spec, s.a, 1.0) - node_position(spec, s.b, 1.0)).norm();
        if (s.rest_length < 0) s.rest_length = ref_len;
        if (!(s.rest_length > 0))
            throw LatticeError("build_lattice: spring rest length must be positive");
        if (!(s.weight > 0.0) || s.weight > 1.0)
            throw LatticeError("build_lattice: spring weight must lie in (0,1]");
        if (!(s.stiffness > 0))
            throw LatticeError("build_lattice: spring stiffness must be positive");
    }
    if (spec.springs.empty()) throw LatticeError("build_lattice: no springs");

    for (auto& a : spec.angle_terms) {
        check_ref(a.apex, "angle term");
        check_ref(a.arm1, "angle term");
        check_ref(a.arm2, "angle term");
        if (a.apex == a.arm1 || a.apex == a.arm2)
            throw LatticeError("build_lattice: angle term apex coincides with an arm");
        if (a.strength < 0) throw LatticeError("build_lattice: negative angle strength");
        if (std::abs(a.preferred_cosine) > 1.0)
            throw LatticeError("build_lattice: preferred cosine outside [-1,1]");
    }

    // Triangulation: nondegenerate triangles tiling U with disjoint interiors.
    if (spec.triangles.empty()) throw LatticeError("build_lattice: no triangulation");
    for (const auto& tri : spec.triangles)
        for (const auto& v : tri.v) {
            if (v.kind == VertexRef::Kind::Node) check_ref(v.node, "triangle");
            else if (v.ghost < 0 || size_t(v.ghost) >= spec.ghosts.size())
                throw LatticeError("build_lattice: triangle references invalid ghost id");
        }
    std::vector<std::vector<Vec2>> tri_pts;
    double area_sum = 0;
    for (size_t t = 0; t < spec.triangles.size(); ++t) {
        std::vector<Vec2> pts;
        for (const auto& v : spec.triangles[t].v)
            pts.push_back(spec.vertex_position(v, {0, 0}, 1.0));
        const double area = std::abs(triangle_signed_area(pts[0], pts[1], pts[2]));
        if (area < 1e-14 * spec.cell_volume)
            throw LatticeError("build_lattice: degenerate triangle " + std::to_string(t));
        area_sum += area;
        tri_pts.push_back(std::move(pts));
    }
    const auto cell_corners = spec.cell.corners();
    const std::vector<Vec2> cell_poly(cell_corners.begin(), cell_corners.end());
    if (std::abs(area_sum - spec.cell_volume) > 1e-9 * spec.cell_volume)
        throw LatticeError("build_lattice: triangulation gap/overlap (areas sum to " +
                           std::to_string(area_sum) + ", cell volume " +
                           std::to_string(spec.cell_volume) + ")");
    for (size_t t = 0; t < tri_pts.size(); ++t) {
        const double in_cell = convex_intersection_area(tri_pts[t], cell_poly);
        const double own = std::abs(triangle_signed_area(tri_pts[t][0], tri_pts[t][1], tri_pts[t][2]));
        if (std::abs(in_cell - own) > 1e-9 * spec.cell_volume)
            throw LatticeError("build_lattice: triangle " + std::to_string(t) +
                               " extends outside the unit cell");
        for (size_t s = t + 1; s < tri_pts.size(); ++s)
            if (convex_intersection_area(tri_pts[t], tri_pts[s]) > 1e-9 * spec.cell_volume)
                throw LatticeError("build_lattice: triangulation gap/overlap (triangles " +
                                   std::to_string(t) + " and " + std::to_string(s) + " overlap)");
    }

    // Every lattice node in closure(U) must be a triangulation vertex.
    for (int b = 0; b < int(spec.basic_nodes.size()); ++b)
        for (int i = -3; i <= 3; ++i)
            for (int j = -3; j <= 3; ++j) {
                const NodeRef r{b, {i, j}};
                const Vec2 pos = node_position(spec, r, 1.0);
                if (spec.cell.inside_distance(pos) < -kGeomTol) continue;
                bool found = false;
                for (const auto& tri : spec.triangles)
                    for (const auto& v : tri.v)
                        if (v.kind == VertexRef::Kind::Node && v.node == r) found = true;
                if (!found)
                    throw LatticeError("build_lattice: node " + ref_str(r) +
                                       " lies in the closed unit cell but is not a "
                                       "triangulation vertex");
            }

    std::set<int> pen(spec.penalty_triangles.begin(), spec.penalty_triangles.end());
    if (pen.size() != spec.penalty_triangles.size())
        throw LatticeError("build_lattice: duplicate penalty triangle id");
    for (int t : pen)
        if (t < 0 || size_t(t) >= spec.triangles.size())
            throw LatticeError("build_lattice: penalty set references triangle " +
                               std::to_string(t) + " outside the cell's own triangulation");

    double spacing = std::numeric_limits<double>::infinity();
    for (const auto& s : spec.springs)
        spacing = std::min(spacing,
                           (node_position(spec, s.a, 1.0) - node_position(spec, s.b, 1.0)).norm());
    spec.min_node_spacing = spacing;

    spec.reach = compute_reach(spec);

    // Node stencil: offsets whose node lands in closure(U_m).
    const int m = spec.reach.m;
    const double tol = kGeomTol * std::max(1.0, spec.cell_vectors.norm());
    for (int b = 0; b < int(spec.basic_nodes.size()); ++b)
        for (int i = -(m + 2); i <= m + 2; ++i)
            for (int j = -(m + 2); j <= m + 2; ++j)
                if (in_expanded_cell(spec, node_position(spec, NodeRef{b, {i, j}}, 1.0), m, tol))
                    spec.node_stencil_m.push_back({b, {i, j}});

    for (int a = -(m - 1); a <= m - 1; ++a)
        for (int b = -(m - 1); b <= m - 1; ++b) {
            const Vec2 shift = spec.cell_vectors * Vec2(double(a), double(b));
            for (const Vec2& c : spec.cell.corners()) spec.um_corners.push_back(c + shift);
        }

    return spec;
}

CellSet cells_in_domain(const LatticeSpec& spec, const Domain& domain, double epsilon) {
    if (!(epsilon > 0)) throw LatticeError("cells_in_domain: epsilon must be positive");
    CellSet out;
    out.epsilon = epsilon;
    const double tol = 1e-12 * domain.diameter();

    Vec2 lo, hi;
    domain.bounding_box(lo, hi);
    const Mat2 vinv = spec.cell_vectors.inverse();
    double k0min = std::numeric_limits<double>::infinity(), k0max = -k0min;
    double k1min = k0min, k1max = -k0min;
    for (const Vec2& c : {lo, hi, Vec2(lo.x(), hi.y()), Vec2(hi.x(), lo.y())}) {
        const Vec2 s = vinv * (c / epsilon);
        k0min = std::min(k0min, s.x());
        k0max = std::max(k0max, s.x());
        k1min = std::min(k1min, s.y());
        k1max = std::max(k1max, s.y());
    }
    const int pad = spec.reach.m + 3;
    const int a0 = int(std::floor(k0min)) - pad, a1 = int(std::ceil(k0max)) + pad;
    const int b0 = int(std::floor(k1min)) - pad, b1 = int(std::ceil(k1max)) + pad;

    for (int a = a0; a <= a1; ++a)
        for (int b = b0; b <= b1; ++b) {
            const Vec2 alpha = spec.cell_vectors * Vec2(double(a), double(b));
            bool ok = true;
            for (const Vec2& q : spec.um_corners) {
                if (domain.inside_distance(epsilon * (q + Vec2(alpha))) <= tol) {
                    ok = false;
                    break;
                }
            }
            if (ok) out.offsets.push_back({a, b});
        }
    std::sort(out.offsets.begin(), out.offsets.end());
    return out;
}

// ---- catalog ---------------------------------------------------------------

namespace {

const double kRt3 = std::sqrt(3.0);

NodeRef nr(int b, int i, int j) { return NodeRef{b, {i, j}}; }
VertexRef vn(int b, int i, int j) { return VertexRef::of_node(nr(b, i, j)); }

LatticeDef kagome_def() {
    // Basic nodes A, O, D in the 2 x sqrt(3) rectangular cell; translation
    // vectors (2,0) and (1,sqrt(3)). Nearest-node distance normalized to 1.
    LatticeDef def;
    def.name = "kagome";
    def.cell_vectors << 2, 1, 0, kRt3;
    def.has_cell_shape = true;
    def.cell_shape.origin = Vec2(0, 0);
    def.cell_shape.edges << 2, 0, 0, kRt3;
    const int A = 0, O = 1, D = 2;
    def.basic_nodes = {Vec2(1, 0), Vec2(0.5, kRt3 / 2), Vec2(1, kRt3)};
    // Corner nodes as translates: B = D - v2, C = A - v1 + v2, E = A + v2,
    // F = D + v1 - v2.
    const NodeRef B = nr(D, 0, -1), C = nr(A, -1, 1), E = nr(A, 0, 1), F = nr(D, 1, -1);
    def.springs = {
        {nr(A, 0, 0), nr(O, 0, 0)}, {B, nr(O, 0, 0)}, {C, nr(O, 0, 0)},
        {nr(D, 0, 0), nr(O, 0, 0)}, {nr(A, 0, 0), F}, {nr(D, 0, 0), E},
    };
    def.triangles = {
        {vn(A, 0, 0), vn(O, 0, 0), VertexRef::of_node(B)},   // 0: material, up
        {VertexRef::of_node(B), vn(O, 0, 0), VertexRef::of_node(C)},
        {VertexRef::of_node(C), vn(O, 0, 0), vn(D, 0, 0)},   // 2: material, down
        {vn(A, 0, 0), vn(O, 0, 0), VertexRef::of_node(F)},
        {vn(D, 0, 0), vn(O, 0, 0), VertexRef::of_node(F)},
        {vn(D, 0, 0), VertexRef::of_node(E), VertexRef::of_node(F)},
    };
    def.penalty_triangles = {0, 2};
    return def;
}

LatticeDef square_def() {
    LatticeDef def;
    def.name = "square";
    def.cell_vectors = Mat2::Identity();
    def.basic_nodes = {Vec2(0, 0)};
    const NodeRef O = nr(0, 0, 0), A = nr(0, 1, 0), B = nr(0, 0, 1), C = nr(0, 1, 1);
    // Half weights: every edge is shared between two neighboring cells.
    def.springs = {
        {O, A, -1, 1, 0.5}, {O, B, -1, 1, 0.5}, {A, C, -1, 1, 0.5}, {B, C, -1, 1, 0.5}};
    def.triangles = {
        {VertexRef::of_node(O), VertexRef::of_node(A), VertexRef::of_node(C)},
        {VertexRef::of_node(O), VertexRef::of_node(B), VertexRef::of_node(C)},
    };
    def.penalty_triangles = {0, 1};
    return def;
}

LatticeDef square_long_range_def() {
    LatticeDef def = square_def();
    def.name = "square-long-range";
    // Long spring from O to the knight-move neighbor (2,1); weight 1 since it
    // is not shared with neighboring cells.
    def.springs.push_back({nr(0, 0, 0), nr(0, 2, 1), -1, 1, 1.0});
    return def;
}

LatticeDef rotating_squares_def() {
    // 2x2 cell; basic nodes A=(0,0), B=(1,0), D=(0,1), O=(1,1). Diagonal
    // springs AO and OH stiffen the two "black" squares; orientation is
    // penalized only there.
    LatticeDef def;
    def.name = "rotating-squares";
    def.cell_vectors << 2, 0, 0, 2;
    def.basic_nodes = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), Vec2(1, 1)};
    const int A = 0, Bn = 1, D = 2, O = 3;
    const NodeRef C = nr(A, 1, 0), E = nr(D, 1, 0), F = nr(A, 0, 1), G = nr(Bn, 0, 1),
                  H = nr(A, 1, 1);
    def.springs = {
        {nr(A, 0, 0), nr(Bn, 0, 0)},  // AB
        {nr(A, 0, 0), nr(O, 0, 0)},   // AO (diagonal)
        {nr(A, 0, 0), nr(D, 0, 0)},   // AD
        {nr(Bn, 0, 0), C},            // BC
        {nr(Bn, 0, 0), nr(O, 0, 0)},  // BO
        {nr(D, 0, 0), nr(O, 0, 0)},   // DO
        {E, nr(O, 0, 0)},             // EO
        {nr(D, 0, 0), F},             // DF
        {nr(O, 0, 0), G},             // OG
        {nr(O, 0, 0), H},             // OH (diagonal)
    };
    def.triangles = {
        {vn(A, 0, 0), vn(Bn, 0, 0), vn(O, 0, 0)},                               // 0 pen
        {vn(A, 0, 0), vn(D, 0, 0), vn(O, 0, 0)},                                // 1 pen
        {vn(O, 0, 0), VertexRef::of_node(E), VertexRef::of_node(H)},            // 2 pen
        {vn(O, 0, 0), VertexRef::of_node(G), VertexRef::of_node(H)},            // 3 pen
        {vn(Bn, 0, 0), VertexRef::of_node(C), VertexRef::of_node(E)},           // 4
        {vn(Bn, 0, 0), VertexRef::of_node(E), vn(O, 0, 0)},                     // 5
        {vn(D, 0, 0), vn(O, 0, 0), VertexRef::of_node(G)},                      // 6
        {vn(D, 0, 0), VertexRef::of_node(G), VertexRef::of_node(F)},            // 7
    };
    def.penalty_triangles = {0, 1, 2, 3};
    return def;
}

}  // namespace

const std::vector<CatalogEntry>& catalog_entries() {
    static const std::vector<CatalogEntry> entries = {
        {"kagome", "corner-sharing triangles, penalty on the two material triangles", 3, 6},
        {"rotating-squares", "square lattice with alternating stiffening diagonals", 4, 10},
        {"square", "nearest-neighbor square lattice, half-weight shared edges", 1, 4},
        {"square-long-range", "square lattice plus a (2,1) long-range spring", 1, 5},
    };
    return entries;
}

LatticeSpec catalog(const std::string& name) {
    if (name == "kagome") return build_lattice(kagome_def());
    if (name == "square") return build_lattice(square_def());
    if (name == "square-long-range") return build_lattice(square_long_range_def());
    if (name == "rotating-squares") return build_lattice(rotating_squares_def());
    throw LatticeError("catalog: unknown lattice '" + name + "'");
}

LatticeSpec spring_only(const LatticeSpec& spec) {
    LatticeDef def;
    def.name = spec.name;
    def.cell_vectors = spec.cell_vectors;
    def.has_cell_shape = true;
    def.cell_shape = spec.cell;
    def.basic_nodes = spec.basic_nodes;
    def.springs = spec.springs;
    def.angle_terms = spec.angle_terms;
    def.ghosts = spec.ghosts;
    def.triangles = spec.triangles;
    def.penalty_triangles = {};
    def.penalty_weighting = spec.penalty_weighting;
    def.eta = spec.eta;
    return build_lattice(def);
}

// ---- definition files ------------------------------------------------------

namespace {

using nlohmann::json;

NodeRef parse_ref(const json& j) {
    // File format uses 1-based basic indices.
    if (!j.is_array() || j.size() != 2 || !j[1].is_array() || j[1].size() != 2)
        throw LatticeError("lattice file: node reference must be [basic_index,[o1,o2]]");
    NodeRef r;
    r.basic = j[0].get<int>() - 1;
    r.offset = {j[1][0].get<int>(), j[1][1].get<int>()};
    return r;
}

Vec2 parse_vec(const json& j) {
    if (!j.is_array() || j.size() != 2)
        throw LatticeError("lattice file: expected a 2-vector");
    return Vec2(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

LatticeDef lattice_def_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw LatticeError(std::string("lattice file: parse error: ") + e.what());
    }
    LatticeDef def;
    def.name = j.value("name", "custom");
    def.dimension = j.value("dimension", 2);
    if (!j.contains("cell_vectors") || j["cell_vectors"].size() != 2)
        throw LatticeError("lattice file: missing cell_vectors");
    def.cell_vectors.col(0) = parse_vec(j["cell_vectors"][0]);
    def.cell_vectors.col(1) = parse_vec(j["cell_vectors"][1]);
    if (j.contains("cell_shape")) {
        def.has_cell_shape = true;
        def.cell_shape.origin = parse_vec(j["cell_shape"]["origin"]);
        def.cell_shape.edges.col(0) = parse_vec(j["cell_shape"]["edges"][0]);
        def.cell_shape.edges.col(1) = parse_vec(j["cell_shape"]["edges"][1]);
    }
    for (const auto& n : j.at("nodes")) def.basic_nodes.push_back(parse_vec(n));
    for (const auto& s : j.at("springs")) {
        SpringTerm t;
        t.a = parse_ref(s.at("endpoints")[0]);
        t.b = parse_ref(s.at("endpoints")[1]);
        t.rest_length = s.value("rest_length", -1.0);
        t.stiffness = s.value("stiffness", 1.0);
        t.weight = s.value("weight", 1.0);
        def.springs.push_back(t);
    }
    if (j.contains("ghosts"))
        for (const auto& g : j["ghosts"]) {
            GhostRule rule;
            for (const auto& term : g.at("terms"))
                rule.terms.push_back({term[0].get<double>(), parse_ref(term[1])});
            def.ghosts.push_back(rule);
        }
    for (const auto& t : j.at("triangles")) {
        Triangle tri;
        int k = 0;
        for (const auto& v : t) {
            if (v.is_object() && v.contains("ghost"))
                tri.v[size_t(k)] = VertexRef::of_ghost(v["ghost"].get<int>());
            else
                tri.v[size_t(k)] = VertexRef::of_node(parse_ref(v));
            if (++k > 3) throw LatticeError("lattice file: triangle with more than 3 vertices");
        }
        if (k != 3) throw LatticeError("lattice file: triangle with fewer than 3 vertices");
        def.triangles.push_back(tri);
    }
    if (j.contains("penalty_triangles"))
        for (const auto& p : j["penalty_triangles"]) def.penalty_triangles.push_back(p.get<int>());
    if (j.contains("penalty_weighting")) {
        const std::string w = j["penalty_weighting"].get<std::string>();
        if (w == "unweighted") def.penalty_weighting = PenaltyWeighting::Unweighted;
        else if (w == "area-weighted") def.penalty_weighting = PenaltyWeighting::AreaWeighted;
        else throw LatticeError("lattice file: penalty_weighting must be 'unweighted' or "
                                "'area-weighted'");
    }
    def.eta = j.value("eta", 0.01);
    if (j.contains("angle_terms"))
        for (const auto& a : j["angle_terms"]) {
            AngleTerm t;
            t.apex = parse_ref(a.at("apex"));
            t.arm1 = parse_ref(a.at("arms")[0]);
            t.arm2 = parse_ref(a.at("arms")[1]);
            t.strength = a.value("strength", 1.0);
            const std::string form = a.value("form", "absolute-cosine");
            if (form == "absolute-cosine") {
                t.form = AngleForm::AbsoluteCosine;
                t.preferred_cosine = a.at("preferred_cosine").get<double>();
            } else if (form == "torsional-quadratic") {
                t.form = AngleForm::TorsionalQuadratic;
                t.theta0 = a.at("theta0").get<double>();
            } else {
                throw LatticeError("lattice file: unknown angle form '" + form + "'");
            }
            def.angle_terms.push_back(t);
        }
    return def;
}

LatticeSpec load_lattice_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LatticeError("load_lattice_file: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return build_lattice(lattice_def_from_json_text(ss.str()));
}

LatticeSpec load_lattice(const std::string& name_or_path) {
    for (const auto& e : catalog_entries())
        if (e.name == name_or_path) return catalog(name_or_path);
    return load_lattice_file(name_or_path);
}

}  // namespace latmet
