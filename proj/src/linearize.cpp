#include "latmet/linearize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace latmet {

Vec2 Deformation::value(const LatticeSpec& spec, const NodeRef& ref) const {
    auto it = values.find(ref);
    if (it != values.end()) return it->second;
    switch (extension.mode) {
        case ExtensionMode::Zero:
            return Vec2::Zero();
        case ExtensionMode::Affine:
            return extension.lambda * node_position(spec, ref, epsilon) + extension.c;
        case ExtensionMode::None:
            break;
    }
    std::ostringstream os;
    os << "missing node value at (" << ref.basic + 1 << ",[" << ref.offset[0] << ","
       << ref.offset[1] << "]) and no extension rule";
    throw MissingNodeValue(os.str());
}

Mat2 p1_gradient(const std::array<Vec2, 3>& x, const std::array<Vec2, 3>& u) {
    Mat2 dx, du;
    dx.col(0) = x[0] - x[1];
    dx.col(1) = x[0] - x[2];
    du.col(0) = u[0] - u[1];
    du.col(1) = u[0] - u[2];
    const double det = dx.determinant();
    if (det == 0) throw std::runtime_error("p1_gradient: degenerate triangle");
    Mat2 inv;
    inv << dx(1, 1), -dx(0, 1), -dx(1, 0), dx(0, 0);
    inv /= det;
    return du * inv;
}

namespace {

Vec2 vertex_value(const Deformation& def, const LatticeSpec& spec, const VertexRef& v,
                  const std::array<int, 2>& cell) {
    if (v.kind == VertexRef::Kind::Node) return def.value(spec, v.node.shifted(cell));
    const GhostRule& rule = spec.ghosts[size_t(v.ghost)];
    Vec2 u = Vec2::Zero();
    for (const auto& [w, src] : rule.terms) u += w * def.value(spec, src.shifted(cell));
    return u;
}

}  // namespace

PiecewiseLinearField linearize(const Deformation& def, const LatticeSpec& spec) {
    PiecewiseLinearField field;
    field.spec = &spec;
    field.window = def.window;
    field.epsilon = def.epsilon;
    const size_t ntri = spec.triangles.size();
    field.tris.resize(def.window.offsets.size() * ntri);
    for (size_t c = 0; c < def.window.offsets.size(); ++c) {
        const auto& cell = def.window.offsets[c];
        for (size_t t = 0; t < ntri; ++t) {
            TriAffine ta;
            std::array<Vec2, 3> u;
            for (int k = 0; k < 3; ++k) {
                ta.x[size_t(k)] = spec.vertex_position(spec.triangles[t].v[size_t(k)], cell,
                                                       def.epsilon);
                u[size_t(k)] = vertex_value(def, spec, spec.triangles[t].v[size_t(k)], cell);
            }
            ta.area = std::abs(triangle_signed_area(ta.x[0], ta.x[1], ta.x[2]));
            if (ta.area < 1e-14 * spec.cell_volume * def.epsilon * def.epsilon)
                throw std::runtime_error("linearize: degenerate triangle");
            ta.A = p1_gradient(ta.x, u);
            ta.b = u[0] - ta.A * ta.x[0];
            field.tris[c * ntri + t] = ta;
        }
    }
    return field;
}

Mat2 gradient_on_triangle(const PiecewiseLinearField& field, size_t cell_index, int tri_id) {
    return field.at(cell_index, tri_id).A;
}

double l2_gradient_norm_sq(const PiecewiseLinearField& field) {
    double s = 0;
    for (const TriAffine& t : field.tris) s += t.A.squaredNorm() * t.area;
    return s;
}

double l2_gradient_norm_sq(const PiecewiseLinearField& field, const std::vector<size_t>& cells) {
    const size_t ntri = field.spec->triangles.size();
    double s = 0;
    for (size_t c : cells)
        for (size_t t = 0; t < ntri; ++t) {
            const TriAffine& ta = field.tris[c * ntri + t];
            s += ta.A.squaredNorm() * ta.area;
        }
    return s;
}

Deformation sample_at_nodes(const std::function<Vec2(const Vec2&)>& f, const CellSet& window,
                            const LatticeSpec& spec, double epsilon) {
    Deformation def;
    def.window = window;
    def.window.epsilon = epsilon;
    def.epsilon = epsilon;
    for (const auto& cell : window.offsets)
        for (const auto& [b, d] : spec.node_stencil_m) {
            const NodeRef ref{b, {d[0] + cell[0], d[1] + cell[1]}};
            if (!def.values.count(ref)) def.set(ref, f(node_position(spec, ref, epsilon)));
        }
    return def;
}

InterpolationReport interpolation_estimate_report(const std::function<Vec2(const Vec2&)>& f,
                                                  double lipschitz_constant,
                                                  const LatticeSpec& spec,
                                                  const std::vector<double>& epsilons,
                                                  const Domain& domain) {
    InterpolationReport rep;
    const double lip = std::max(lipschitz_constant, 0.0);
    for (double eps : epsilons) {
        const CellSet cells = cells_in_domain(spec, domain, eps);
        const Deformation def = sample_at_nodes(f, cells, spec, eps);
        const PiecewiseLinearField field = linearize(def, spec);
        double sup_grad = 0, sup_err = 0;
        for (const TriAffine& t : field.tris) {
            sup_grad = std::max(sup_grad, t.A.norm());
            // Sample |u - f| at vertices, edge midpoints and the centroid.
            const std::array<Vec2, 7> pts = {
                t.x[0], t.x[1], t.x[2],
                0.5 * (t.x[0] + t.x[1]), 0.5 * (t.x[1] + t.x[2]), 0.5 * (t.x[0] + t.x[2]),
                (t.x[0] + t.x[1] + t.x[2]) / 3.0};
            for (const Vec2& p : pts)
                sup_err = std::max(sup_err, (t.A * p + t.b - f(p)).norm());
        }
        rep.epsilons.push_back(eps);
        rep.gradient_ratio.push_back(lip > 0 ? sup_grad / lip : 0.0);
        rep.error_ratio.push_back(lip > 0 ? sup_err / (eps * lip) : 0.0);
    }
    auto slope = [&](const std::vector<double>& ratios) {
        std::vector<double> lx, ly;
        for (size_t i = 0; i < ratios.size(); ++i) {
            if (ratios[i] <= 1e-13) continue;
            lx.push_back(std::log(rep.epsilons[i]));
            ly.push_back(std::log(ratios[i]));
        }
        if (lx.size() < 2) return 0.0;  // ratios vanish: trivially stable
        return fit_slope(lx, ly);
    };
    rep.gradient_ratio_slope = slope(rep.gradient_ratio);
    rep.error_ratio_slope = slope(rep.error_ratio);
    return rep;
}

std::string field_to_csv(const PiecewiseLinearField& field) {
    std::string out =
        "cell_o1,cell_o2,triangle,x1x,x1y,x2x,x2y,x3x,x3y,a11,a12,a21,a22,b1,b2\n";
    char buf[512];
    const size_t ntri = field.spec->triangles.size();
    for (size_t c = 0; c < field.window.offsets.size(); ++c)
        for (size_t t = 0; t < ntri; ++t) {
            const TriAffine& ta = field.tris[c * ntri + t];
            std::snprintf(buf, sizeof buf,
                          "%d,%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                          "%.17g,%.17g,%.17g\n",
                          field.window.offsets[c][0], field.window.offsets[c][1], t,
                          ta.x[0].x(), ta.x[0].y(), ta.x[1].x(), ta.x[1].y(), ta.x[2].x(),
                          ta.x[2].y(), ta.A(0, 0), ta.A(0, 1), ta.A(1, 0), ta.A(1, 1),
                          ta.b.x(), ta.b.y());
            out += buf;
        }
    return out;
}

}  // namespace latmet
