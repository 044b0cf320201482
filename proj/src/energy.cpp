#include "latmet/energy.hpp"

#include <cmath>
#include <cstdio>

namespace latmet {

namespace {

double logistic(double s) {
    if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

}  // namespace

double PenaltyFunction::value(double t) const {
    if (tau == 0) return t <= 0 ? 1.0 / eta : 0.0;
    return logistic(-t / tau) / eta;
}

double PenaltyFunction::derivative(double t) const {
    if (tau == 0) throw std::runtime_error("PenaltyFunction: exact form is not differentiable");
    const double s = logistic(-t / tau);
    return -s * (1.0 - s) / (eta * tau);
}

double spring_energy(const Deformation& def, const LatticeSpec& spec, const SpringTerm& term,
                     const std::array<int, 2>& cell_offset, double epsilon) {
    const Vec2 ua = def.value(spec, term.a.shifted(cell_offset));
    const Vec2 ub = def.value(spec, term.b.shifted(cell_offset));
    const double len = (ua - ub).norm();
    const double d = len - epsilon * term.rest_length;
    return term.weight * term.stiffness * d * d;
}

double angle_energy(const Deformation& def, const LatticeSpec& spec, const AngleTerm& term,
                    const std::array<int, 2>& cell_offset, double epsilon) {
    const Vec2 up = def.value(spec, term.apex.shifted(cell_offset));
    const Vec2 l1 = def.value(spec, term.arm1.shifted(cell_offset)) - up;
    const Vec2 l2 = def.value(spec, term.arm2.shifted(cell_offset)) - up;
    if (term.form == AngleForm::AbsoluteCosine) {
        return term.strength * std::abs(l1.dot(l2) - l1.norm() * l2.norm() * term.preferred_cosine);
    }
    const double n1 = l1.norm(), n2 = l2.norm();
    if (n1 == 0 || n2 == 0)
        throw std::runtime_error("angle_energy: zero-length deformed arm in torsional term");
    const double theta = std::atan2(l1.x() * l2.y() - l1.y() * l2.x(), l1.dot(l2));
    const double d = theta - term.theta0;
    return term.strength * d * d * epsilon * epsilon;
}

Mat2 cell_triangle_gradient(const Deformation& def, const LatticeSpec& spec,
                            const std::array<int, 2>& cell_offset, int tri_id, double epsilon) {
    const Triangle& tri = spec.triangles[size_t(tri_id)];
    std::array<Vec2, 3> x, u;
    for (int k = 0; k < 3; ++k) {
        const VertexRef& v = tri.v[size_t(k)];
        x[size_t(k)] = spec.vertex_position(v, cell_offset, epsilon);
        if (v.kind == VertexRef::Kind::Node) {
            u[size_t(k)] = def.value(spec, v.node.shifted(cell_offset));
        } else {
            Vec2 val = Vec2::Zero();
            for (const auto& [w, src] : spec.ghosts[size_t(v.ghost)].terms)
                val += w * def.value(spec, src.shifted(cell_offset));
            u[size_t(k)] = val;
        }
    }
    return p1_gradient(x, u);
}

namespace {

double penalty_triangle_scale(const LatticeSpec& spec, int tri_id, double epsilon) {
    double w = epsilon * epsilon;  // elasticity scaling, N = 2
    if (spec.penalty_weighting == PenaltyWeighting::AreaWeighted) {
        const Triangle& tri = spec.triangles[size_t(tri_id)];
        const Vec2 a = spec.vertex_position(tri.v[0], {0, 0}, 1.0);
        const Vec2 b = spec.vertex_position(tri.v[1], {0, 0}, 1.0);
        const Vec2 c = spec.vertex_position(tri.v[2], {0, 0}, 1.0);
        w *= std::abs(triangle_signed_area(a, b, c));
    }
    return w;
}

}  // namespace

double penalty_energy(const Deformation& def, const LatticeSpec& spec, const PenaltyFunction& pf,
                      const std::array<int, 2>& cell_offset, double epsilon) {
    double e = 0;
    for (int t : spec.penalty_triangles) {
        const Mat2 g = cell_triangle_gradient(def, spec, cell_offset, t, epsilon);
        e += pf.value(g.determinant()) * penalty_triangle_scale(spec, t, epsilon);
    }
    return e;
}

double penalty_energy(const PiecewiseLinearField& field, const LatticeSpec& spec,
                      const PenaltyFunction& pf, size_t cell_index) {
    double e = 0;
    for (int t : spec.penalty_triangles) {
        const Mat2 g = field.at(cell_index, t).A;
        e += pf.value(g.determinant()) * penalty_triangle_scale(spec, t, field.epsilon);
    }
    return e;
}

EnergyBreakdown cell_energy(const Deformation& def, const LatticeSpec& spec,
                            const PenaltyFunction& pf, const std::array<int, 2>& cell_offset,
                            double epsilon, bool with_per_term) {
    EnergyBreakdown out;
    for (size_t i = 0; i < spec.springs.size(); ++i) {
        const double e = spring_energy(def, spec, spec.springs[i], cell_offset, epsilon);
        out.spring += e;
        if (with_per_term) out.per_term.push_back({"spring:" + std::to_string(i), e});
    }
    for (int t : spec.penalty_triangles) {
        const Mat2 g = cell_triangle_gradient(def, spec, cell_offset, t, epsilon);
        const double e = pf.value(g.determinant()) * penalty_triangle_scale(spec, t, epsilon);
        out.penalty += e;
        if (with_per_term) out.per_term.push_back({"penalty:" + std::to_string(t), e});
    }
    for (size_t i = 0; i < spec.angle_terms.size(); ++i) {
        const double e = angle_energy(def, spec, spec.angle_terms[i], cell_offset, epsilon);
        out.angle += e;
        if (with_per_term) out.per_term.push_back({"angle:" + std::to_string(i), e});
    }
    out.total = out.spring + out.penalty + out.angle;
    return out;
}

std::vector<std::pair<std::array<int, 2>, EnergyBreakdown>>
domain_energy_cells(const Deformation& def, const LatticeSpec& spec, const PenaltyFunction& pf,
                    const Domain& domain, double epsilon) {
    const CellSet cells = cells_in_domain(spec, domain, epsilon);
    std::vector<std::pair<std::array<int, 2>, EnergyBreakdown>> rows(cells.offsets.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < long(cells.offsets.size()); ++i) {
        const auto& off = cells.offsets[size_t(i)];
        rows[size_t(i)] = {off, cell_energy(def, spec, pf, off, epsilon)};
    }
    return rows;
}

EnergyBreakdown domain_energy(const Deformation& def, const LatticeSpec& spec,
                              const PenaltyFunction& pf, const Domain& domain, double epsilon) {
    const auto rows = domain_energy_cells(def, spec, pf, domain, epsilon);
    EnergyBreakdown out;
    for (const auto& [off, e] : rows) {
        out.spring += e.spring;
        out.penalty += e.penalty;
        out.angle += e.angle;
    }
    out.total = out.spring + out.penalty + out.angle;
    return out;
}

EnergyBreakdown domain_energy_serial(const Deformation& def, const LatticeSpec& spec,
                                     const PenaltyFunction& pf, const Domain& domain,
                                     double epsilon) {
    const CellSet cells = cells_in_domain(spec, domain, epsilon);
    EnergyBreakdown out;
    for (const auto& off : cells.offsets) {
        const EnergyBreakdown e = cell_energy(def, spec, pf, off, epsilon);
        out.spring += e.spring;
        out.penalty += e.penalty;
        out.angle += e.angle;
    }
    out.total = out.spring + out.penalty + out.angle;
    return out;
}

std::string energy_report_csv(
    const std::vector<std::pair<std::array<int, 2>, EnergyBreakdown>>& rows) {
    std::string out = "cell_o1,cell_o2,spring,penalty,angle,total\n";
    char buf[200];
    for (const auto& [off, e] : rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", off[0], off[1],
                      e.spring, e.penalty, e.angle, e.total);
        out += buf;
    }
    return out;
}

NodalGradient energy_gradient(const Deformation& def, const LatticeSpec& spec,
                              const PenaltyFunction& pf, const CellSet& window, double epsilon) {
    if (pf.tau <= 0)
        throw std::runtime_error("energy_gradient: smoothing tau must be positive");
    NodalGradient grad;
    auto add = [&](const NodeRef& ref, const Vec2& g) {
        if (!def.values.count(ref)) return;  // extension-provided values are not free
        grad.try_emplace(ref, Vec2::Zero()).first->second += g;
    };

    for (const auto& cell : window.offsets) {
        for (const auto& s : spec.springs) {
            const NodeRef ra = s.a.shifted(cell), rb = s.b.shifted(cell);
            const Vec2 e = def.value(spec, ra) - def.value(spec, rb);
            const double len = e.norm();
            if (len == 0) continue;
            const Vec2 g = 2.0 * s.weight * s.stiffness * (len - epsilon * s.rest_length) *
                           (e / len);
            add(ra, g);
            add(rb, -g);
        }
        for (int t : spec.penalty_triangles) {
            const Triangle& tri = spec.triangles[size_t(t)];
            std::array<Vec2, 3> x, u;
            for (int k = 0; k < 3; ++k) {
                x[size_t(k)] = spec.vertex_position(tri.v[size_t(k)], cell, epsilon);
                const VertexRef& v = tri.v[size_t(k)];
                if (v.kind == VertexRef::Kind::Node) {
                    u[size_t(k)] = def.value(spec, v.node.shifted(cell));
                } else {
                    Vec2 val = Vec2::Zero();
                    for (const auto& [w, src] : spec.ghosts[size_t(v.ghost)].terms)
                        val += w * def.value(spec, src.shifted(cell));
                    u[size_t(k)] = val;
                }
            }
            Mat2 dx;
            dx.col(0) = x[0] - x[1];
            dx.col(1) = x[0] - x[2];
            Mat2 p;  // dx^-1
            const double detx = dx.determinant();
            p << dx(1, 1), -dx(0, 1), -dx(1, 0), dx(0, 0);
            p /= detx;
            Mat2 du;
            du.col(0) = u[0] - u[1];
            du.col(1) = u[0] - u[2];
            const Mat2 g = du * p;
            Mat2 cof;  // d(det g)/dg
            cof << g(1, 1), -g(1, 0), -g(0, 1), g(0, 0);
            const double coeff =
                pf.derivative(g.determinant()) * penalty_triangle_scale(spec, t, epsilon);
            const Mat2 d_du = coeff * cof * p.transpose();  // d(energy)/d(du columns)
            const std::array<Vec2, 3> dvert = {Vec2(d_du.col(0) + d_du.col(1)),
                                               Vec2(-d_du.col(0)), Vec2(-d_du.col(1))};
            for (int k = 0; k < 3; ++k) {
                const VertexRef& v = tri.v[size_t(k)];
                if (v.kind == VertexRef::Kind::Node) {
                    add(v.node.shifted(cell), dvert[size_t(k)]);
                } else {
                    for (const auto& [w, src] : spec.ghosts[size_t(v.ghost)].terms)
                        add(src.shifted(cell), w * dvert[size_t(k)]);
                }
            }
        }
        for (const auto& a : spec.angle_terms) {
            const NodeRef rp = a.apex.shifted(cell), r1 = a.arm1.shifted(cell),
                          r2 = a.arm2.shifted(cell);
            const Vec2 up = def.value(spec, rp);
            const Vec2 l1 = def.value(spec, r1) - up;
            const Vec2 l2 = def.value(spec, r2) - up;
            Vec2 d1 = Vec2::Zero(), d2 = Vec2::Zero();
            if (a.form == AngleForm::AbsoluteCosine) {
                const double n1 = l1.norm(), n2 = l2.norm();
                const double g = l1.dot(l2) - n1 * n2 * a.preferred_cosine;
                const double sg = g > 0 ? 1.0 : (g < 0 ? -1.0 : 0.0);
                d1 = a.strength * sg * (l2 - (n1 > 0 ? Vec2(a.preferred_cosine * n2 / n1 * l1)
                                                     : Vec2::Zero()));
                d2 = a.strength * sg * (l1 - (n2 > 0 ? Vec2(a.preferred_cosine * n1 / n2 * l2)
                                                     : Vec2::Zero()));
            } else {
                const double cr = l1.x() * l2.y() - l1.y() * l2.x();
                const double dot = l1.dot(l2);
                const double den = l1.squaredNorm() * l2.squaredNorm();
                if (den == 0)
                    throw std::runtime_error("energy_gradient: zero-length torsional arm");
                const double theta = std::atan2(cr, dot);
                const double c = 2.0 * a.strength * (theta - a.theta0) * epsilon * epsilon;
                // d theta = (dot * d(cr) - cr * d(dot)) / (|l1|^2 |l2|^2)
                const Vec2 dcr_d1(l2.y(), -l2.x()), dcr_d2(-l1.y(), l1.x());
                d1 = c * (dot * dcr_d1 - cr * l2) / den;
                d2 = c * (dot * dcr_d2 - cr * l1) / den;
            }
            add(r1, d1);
            add(r2, d2);
            add(rp, -(d1 + d2));
        }
    }
    return grad;
}

}  // namespace latmet
