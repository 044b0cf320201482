#pragma once

#include "latmet/lattice.hpp"

#include <functional>
#include <unordered_map>

namespace latmet {

enum class ExtensionMode { None, Zero, Affine };

/// How to value nodes the deformation does not store: not at all, as zero,
/// or as the affine map lambda*x + c.
struct ExtensionRule {
    ExtensionMode mode = ExtensionMode::None;
    Mat2 lambda = Mat2::Zero();
    Vec2 c = Vec2::Zero();

    static ExtensionRule none() { return {}; }
    static ExtensionRule zero() { return {ExtensionMode::Zero, Mat2::Zero(), Vec2::Zero()}; }
    static ExtensionRule affine(const Mat2& l, const Vec2& cc = Vec2::Zero()) {
        return {ExtensionMode::Affine, l, cc};
    }
};

struct MissingNodeValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Nodal vector field on a finite window of the scaled lattice.
struct Deformation {
    std::unordered_map<NodeRef, Vec2, NodeRefHash> values;
    CellSet window;
    double epsilon = 1;
    ExtensionRule extension;

    Vec2 value(const LatticeSpec& spec, const NodeRef& ref) const;
    void set(const NodeRef& ref, const Vec2& v) { values[ref] = v; }
};

struct TriAffine {
    Mat2 A = Mat2::Zero();
    Vec2 b = Vec2::Zero();
    std::array<Vec2, 3> x{};  // scaled vertex positions
    double area = 0;
};

/// P1 extension of a Deformation over the triangulated window: one affine map
/// per (cell, triangle).
struct PiecewiseLinearField {
    const LatticeSpec* spec = nullptr;
    CellSet window;
    double epsilon = 1;
    std::vector<TriAffine> tris;  // window cell index * ntri + tri id

    const TriAffine& at(size_t cell_index, int tri_id) const {
        return tris[cell_index * spec->triangles.size() + size_t(tri_id)];
    }
    Vec2 evaluate(size_t cell_index, int tri_id, const Vec2& x) const {
        const TriAffine& t = at(cell_index, tri_id);
        return t.A * x + t.b;
    }
};

PiecewiseLinearField linearize(const Deformation& def, const LatticeSpec& spec);

/// Constant gradient of the affine map on one triangle.
Mat2 gradient_on_triangle(const PiecewiseLinearField& field, size_t cell_index, int tri_id);

/// Gradient of the P1 interpolant given scaled vertex positions and values:
/// [u1-u2, u1-u3] [x1-x2, x1-x3]^-1.
Mat2 p1_gradient(const std::array<Vec2, 3>& x, const std::array<Vec2, 3>& u);

/// Sum over triangles of |grad|_F^2 * |T| over the whole window.
double l2_gradient_norm_sq(const PiecewiseLinearField& field);
/// Same restricted to a subset of window cells (by index into window.offsets).
double l2_gradient_norm_sq(const PiecewiseLinearField& field, const std::vector<size_t>& cells);

Deformation sample_at_nodes(const std::function<Vec2(const Vec2&)>& f, const CellSet& window,
                            const LatticeSpec& spec, double epsilon);

struct InterpolationReport {
    std::vector<double> epsilons;
    std::vector<double> gradient_ratio;  // sup |grad u_eps| / Lip(f)
    std::vector<double> error_ratio;     // sup |u_eps - f| / (eps Lip(f))
    double gradient_ratio_slope = 0;     // log ratio vs log eps
    double error_ratio_slope = 0;
};

InterpolationReport interpolation_estimate_report(const std::function<Vec2(const Vec2&)>& f,
                                                  double lipschitz_constant,
                                                  const LatticeSpec& spec,
                                                  const std::vector<double>& epsilons,
                                                  const Domain& domain);

/// Per-triangle CSV export of a field (triangle id, vertex positions, affine data).
std::string field_to_csv(const PiecewiseLinearField& field);

}  // namespace latmet
