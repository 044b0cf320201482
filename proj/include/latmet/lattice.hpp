#pragma once

#include "latmet/geometry.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace latmet {

/// One lattice node, addressed as basic node index + integer cell offset.
/// The node's reference position is p_basic + offset_1 v_1 + offset_2 v_2.
struct NodeRef {
    int basic = 0;
    std::array<int, 2> offset{0, 0};

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
    NodeRef shifted(const std::array<int, 2>& d) const {
        return NodeRef{basic, {offset[0] + d[0], offset[1] + d[1]}};
    }
};

struct NodeRefHash {
    size_t operator()(const NodeRef& r) const {
        std::uint64_t z = std::uint64_t(std::uint32_t(r.basic));
        z = z * 0x100000001b3ULL ^ std::uint64_t(std::uint32_t(r.offset[0]));
        z = z * 0x100000001b3ULL ^ std::uint64_t(std::uint32_t(r.offset[1]));
        z ^= z >> 33;
        z *= 0xff51afd7ed558ccdULL;
        z ^= z >> 33;
        return size_t(z);
    }
};

struct SpringTerm {
    NodeRef a, b;
    double rest_length = -1;  // <0: default to reference distance at build
    double stiffness = 1;
    double weight = 1;  // sharing factor with neighboring cells, in (0,1]
};

enum class AngleForm { AbsoluteCosine, TorsionalQuadratic };

struct AngleTerm {
    NodeRef apex, arm1, arm2;
    double preferred_cosine = 1;  // absolute-cosine form
    double theta0 = 0;            // torsional form
    double strength = 0;          // multiplier (spring constant k_s for torsional)
    AngleForm form = AngleForm::AbsoluteCosine;
};

/// Triangulation vertex: either a lattice node or a ghost vertex whose value
/// is a fixed convex combination of node values.
struct VertexRef {
    enum class Kind { Node, Ghost } kind = Kind::Node;
    NodeRef node;
    int ghost = -1;

    static VertexRef of_node(NodeRef r) { return VertexRef{Kind::Node, r, -1}; }
    static VertexRef of_ghost(int id) { return VertexRef{Kind::Ghost, NodeRef{}, id}; }
};

struct Triangle {
    std::array<VertexRef, 3> v;
};

struct GhostRule {
    std::vector<std::pair<double, NodeRef>> terms;  // coefficients in (0,1), sum 1
};

enum class PenaltyWeighting { Unweighted, AreaWeighted };

/// The fundamental-domain parallelogram: origin corner plus two edge vectors.
/// Need not be spanned by the translation vectors (the Kagome cell is a
/// rectangle), but its v-translates must tile the plane.
struct CellShape {
    Vec2 origin = Vec2::Zero();
    Mat2 edges = Mat2::Identity();  // columns e1, e2

    std::array<Vec2, 4> corners() const {
        const Vec2 e1 = edges.col(0), e2 = edges.col(1);
        return {origin, origin + e1, origin + e1 + e2, origin + e2};
    }
    double area() const { return std::abs(edges.determinant()); }
    /// Inside distance to the parallelogram boundary (>0 strictly inside).
    double inside_distance(const Vec2& p) const;
};

/// Energy/linearization reach: E(u,U) reads values in closure(U_n); the
/// gradient on U_n reads nodes in closure(U_m); d_m = diam(U_m).
struct Reach {
    int n = 1;
    int m = 1;
    double d_m = 0;
};

/// A finite set of cells at scale epsilon; offsets are the integer
/// multipliers k with alpha = epsilon * (k_1 v_1 + k_2 v_2).
struct CellSet {
    std::vector<std::array<int, 2>> offsets;
    double epsilon = 1;
};

/// Plain input description of a lattice; validated by build_lattice.
struct LatticeDef {
    std::string name;
    int dimension = 2;
    Mat2 cell_vectors = Mat2::Identity();  // columns v1, v2
    bool has_cell_shape = false;
    CellShape cell_shape;  // defaults to the v-parallelogram
    std::vector<Vec2> basic_nodes;
    std::vector<SpringTerm> springs;
    std::vector<AngleTerm> angle_terms;
    std::vector<GhostRule> ghosts;
    std::vector<Triangle> triangles;
    std::vector<int> penalty_triangles;
    PenaltyWeighting penalty_weighting = PenaltyWeighting::Unweighted;
    double eta = 0.01;
};

struct LatticeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Validated, immutable lattice specification. All operations on it are pure.
class LatticeSpec {
  public:
    std::string name;
    Mat2 cell_vectors;
    CellShape cell;
    std::vector<Vec2> basic_nodes;
    std::vector<SpringTerm> springs;
    std::vector<AngleTerm> angle_terms;
    std::vector<GhostRule> ghosts;
    std::vector<Triangle> triangles;
    std::vector<int> penalty_triangles;
    PenaltyWeighting penalty_weighting = PenaltyWeighting::Unweighted;
    double eta = 0.01;

    // Derived at build time.
    double cell_volume = 1;        // |U| = |det[v1 v2]|
    double min_node_spacing = 1;   // smallest spring reference length
    Reach reach;
    /// Offsets d such that node (b, d) lies in closure(U_m); per basic index.
    std::vector<std::pair<int, std::array<int, 2>>> node_stencil_m;
    /// Corner points of U_m (reference scale), used for strict-inclusion tests.
    std::vector<Vec2> um_corners;

    bool penalized(int tri) const {
        for (int t : penalty_triangles)
            if (t == tri) return true;
        return false;
    }
    double penalty_ceiling() const;  // M in 0 <= E_pen <= M

    Vec2 vertex_position(const VertexRef& v, const std::array<int, 2>& cell_offset,
                         double epsilon) const;
};

LatticeSpec build_lattice(const LatticeDef& def);

Vec2 node_position(const LatticeSpec& spec, const NodeRef& ref, double epsilon);

Reach compute_reach(const LatticeSpec& spec);

CellSet cells_in_domain(const LatticeSpec& spec, const Domain& domain, double epsilon);

// ---- catalog --------------------------------------------------------------

struct CatalogEntry {
    std::string name;
    std::string description;
    int node_count;
    int spring_count;
};

const std::vector<CatalogEntry>& catalog_entries();
LatticeSpec catalog(const std::string& name);

/// The same lattice with the orientation penalty removed (spring energy only).
LatticeSpec spring_only(const LatticeSpec& spec);

// ---- lattice definition files ---------------------------------------------

LatticeDef lattice_def_from_json_text(const std::string& text);
LatticeSpec load_lattice_file(const std::string& path);
/// Catalog name or a path to a definition file.
LatticeSpec load_lattice(const std::string& name_or_path);

}  // namespace latmet
