#include "latmet/analysis.hpp"

#include "latmet/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>

namespace latmet {

double polygon_energy(const std::vector<Vec2>& ref, const std::vector<Vec2>& def) {
    if (ref.size() < 3 || ref.size() != def.size())
        throw std::invalid_argument("polygon_energy: need >= 3 matched vertices");
    double e = 0;
    for (size_t i = 0; i + 1 < ref.size(); ++i) {
        const double d = (def[i + 1] - def[i]).norm() - (ref[i + 1] - ref[i]).norm();
        e += d * d;
    }
    return e;
}

TriangleConstants triangle_bound_constants(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double area = std::abs(triangle_signed_area(a, b, c));
    if (area < 1e-14) throw std::invalid_argument("triangle_bound_constants: degenerate triangle");
    Mat2 m2;
    m2.col(0) = a - b;
    m2.col(1) = b - c;
    Eigen::JacobiSVD<Mat2> svd(m2);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(1);
    TriangleConstants t;
    t.alpha = 1.0 / (smax * smax);
    t.beta = 1.0 / (smin * smin);
    const double edge_sq = (a - b).squaredNorm() + (b - c).squaredNorm();
    t.c1 = std::max(1.0 / (t.alpha * area), edge_sq / area);
    t.c2 = 1.0 / (2.0 * t.beta * area);
    t.c3 = 2.0 * edge_sq / area;
    return t;
}

PolygonConstants polygon_bound_constants(const std::vector<Vec2>& poly) {
    if (poly.size() < 3)
        throw std::invalid_argument("polygon_bound_constants: need >= 3 vertices");
    if (!is_convex_polygon(poly))
        throw std::invalid_argument("polygon_bound_constants: polygon is not convex");
    if (poly.size() == 3) {
        const TriangleConstants t = triangle_bound_constants(poly[0], poly[1], poly[2]);
        return {t.c1, t.c2, t.c3};
    }
    // Split off the triangle A1 A2 A3 and recurse on A1 A3 ... An.
    const TriangleConstants head = triangle_bound_constants(poly[0], poly[1], poly[2]);
    std::vector<Vec2> rest;
    rest.push_back(poly[0]);
    rest.insert(rest.end(), poly.begin() + 2, poly.end());
    const PolygonConstants tail = polygon_bound_constants(rest);

    const double head_area = std::abs(triangle_signed_area(poly[0], poly[1], poly[2]));
    const double rest_area = polygon_area(rest);
    const double total_area = head_area + rest_area;
    const double m = std::max((poly[0] - poly[1]).norm(), (poly[1] - poly[2]).norm());
    const double gamma = 6.0 * m * m;

    PolygonConstants out;
    out.c1 = std::max(head.c1, tail.c1);
    out.c2 = std::min(head.c2 / 2.0, tail.c2 / 6.0);
    out.c3 = (head.c3 * head_area / 2.0 + tail.c3 * rest_area / 6.0 + gamma / 2.0) / total_area;
    return out;
}

double polygon_fan_gradient_sq(const std::vector<Vec2>& ref, const std::vector<Vec2>& def) {
    double s = 0;
    for (size_t i = 1; i + 1 < ref.size(); ++i) {
        const Mat2 g = p1_gradient({ref[0], ref[i], ref[i + 1]}, {def[0], def[i], def[i + 1]});
        s += g.squaredNorm() * std::abs(triangle_signed_area(ref[0], ref[i], ref[i + 1]));
    }
    return s;
}

// ---- registered cell decompositions ----------------------------------------

namespace {

struct ChainBound {
    double grad_coeff;  // L * sum_i |pair_i|^2 / |T_i|
    double constant;    // rest^2
};

struct Decomposition {
    struct Part {
        std::string name;
        double weight;
        std::vector<Vec2> poly;
    };
    std::vector<Part> upper, lower;
    std::vector<ChainBound> chains;  // long springs bounded through mesh triangles
};

Vec2 npos(const LatticeSpec& spec, int b, int i, int j) {
    return node_position(spec, NodeRef{b, {i, j}}, 1.0);
}

Decomposition registered_decomposition(const LatticeSpec& spec) {
    Decomposition d;
    if (spec.name == "kagome") {
        const Vec2 a = npos(spec, 0, 0, 0), o = npos(spec, 1, 0, 0), dd = npos(spec, 2, 0, 0);
        const Vec2 b = npos(spec, 2, 0, -1), c = npos(spec, 0, -1, 1), e = npos(spec, 0, 0, 1),
                   f = npos(spec, 2, 1, -1);
        d.upper = {{"tri BOC", 1.0, {b, o, c}}, {"pent FAODE", 1.0, {f, a, o, dd, e}}};
        d.lower = {{"tri AOB", 0.5, {a, o, b}},
                   {"tri BOC", 0.5, {b, o, c}},
                   {"tri COD", 0.5, {c, o, dd}},
                   {"pent FAODE", 0.5, {f, a, o, dd, e}}};
        return d;
    }
    if (spec.name == "square" || spec.name == "square-long-range") {
        const Vec2 o = npos(spec, 0, 0, 0), a = npos(spec, 0, 1, 0), b = npos(spec, 0, 0, 1),
                   c = npos(spec, 0, 1, 1);
        d.upper = {{"tri OAC", 0.5, {o, a, c}}, {"tri OBC", 0.5, {o, b, c}}};
        d.lower = d.upper;
        if (spec.name == "square-long-range") {
            // E_OD through the chain O-A on tri OAC and A-D on tri ACD.
            const Vec2 dd = npos(spec, 0, 2, 1);
            const double c_oa =
                (o - a).squaredNorm() / std::abs(triangle_signed_area(o, a, c));
            const double c_ad =
                (a - dd).squaredNorm() / std::abs(triangle_signed_area(a, c, dd));
            d.chains.push_back({2.0 * (c_oa + c_ad), (o - dd).squaredNorm()});
        }
        return d;
    }
    if (spec.name == "rotating-squares") {
        const Vec2 a = npos(spec, 0, 0, 0), b = npos(spec, 1, 0, 0), dd = npos(spec, 2, 0, 0),
                   o = npos(spec, 3, 0, 0);
        const Vec2 c = npos(spec, 0, 1, 0), e = npos(spec, 2, 1, 0), f = npos(spec, 0, 0, 1),
                   g = npos(spec, 1, 0, 1), h = npos(spec, 0, 1, 1);
        const std::vector<Decomposition::Part> parts = {
            {"tri DAO", 1.0, {dd, a, o}},    {"tri BAO", 1.0, {b, a, o}},
            {"quad EOBC", 1.0, {e, o, b, c}}, {"quad GODF", 1.0, {g, o, dd, f}},
            {"tri GOH", 0.5, {g, o, h}},     {"tri EOH", 0.5, {e, o, h}}};
        d.upper = parts;
        d.lower = parts;
        for (auto& p : d.lower) p.weight = 0.5;
        return d;
    }
    throw std::invalid_argument("cell_bound_constants: no registered polygon decomposition for '" +
                                spec.name + "'");
}

}  // namespace

std::vector<std::pair<std::string, std::vector<Vec2>>> registered_polygons(
    const LatticeSpec& spec) {
    const Decomposition d = registered_decomposition(spec);
    std::vector<std::pair<std::string, std::vector<Vec2>>> out;
    auto add = [&](const Decomposition::Part& p) {
        for (const auto& [name, poly] : out)
            if (name == p.name) return;
        out.push_back({p.name, p.poly});
    };
    for (const auto& p : d.upper) add(p);
    for (const auto& p : d.lower) add(p);
    return out;
}

BoundConstants cell_bound_constants(const LatticeSpec& spec) {
    const Decomposition d = registered_decomposition(spec);
    BoundConstants bc;
    bc.M = spec.penalty_ceiling();

    double a_total = 0, b_total = bc.M;
    for (const auto& part : d.upper) {
        BoundConstants::Entry e;
        e.name = part.name;
        e.weight = part.weight;
        e.area = polygon_area(part.poly);
        e.poly = polygon_bound_constants(part.poly);
        if (part.poly.size() == 3)
            e.tri = triangle_bound_constants(part.poly[0], part.poly[1], part.poly[2]);
        a_total += part.weight * e.poly.c1;
        b_total += part.weight * e.poly.c1 * e.area;
        bc.upper.push_back(std::move(e));
    }
    for (const auto& ch : d.chains) {
        a_total += ch.grad_coeff;
        b_total += ch.constant;
    }
    const int n = spec.reach.n;
    const double un_area = double((2 * n - 1) * (2 * n - 1)) * spec.cell_volume;
    bc.C1 = std::max(a_total, b_total / un_area);

    double c2_min = std::numeric_limits<double>::infinity();
    double c3_max = 0, w_area = 0;
    for (const auto& part : d.lower) {
        BoundConstants::Entry e;
        e.name = part.name;
        e.weight = part.weight;
        e.area = polygon_area(part.poly);
        e.poly = polygon_bound_constants(part.poly);
        if (part.poly.size() == 3)
            e.tri = triangle_bound_constants(part.poly[0], part.poly[1], part.poly[2]);
        c2_min = std::min(c2_min, part.weight * e.poly.c2);
        c3_max = std::max(c3_max, e.poly.c3);
        w_area += part.weight * e.area;
        bc.lower.push_back(std::move(e));
    }
    bc.C2 = c2_min;
    bc.D2 = c3_max * w_area / (bc.C2 * spec.cell_volume);
    return bc;
}

// ---- randomized audits -------------------------------------------------------

namespace {

Mat2 random_macro_gradient(Rng& rng) {
    for (;;) {
        Mat2 l;
        l << rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3);
        if (l.norm() <= 3.0) return l;
    }
}

double noise_sigma(int sample) {
    switch (sample % 3) {
        case 0: return 0.0;
        case 1: return 0.1;
        default: return 1.0;
    }
}

}  // namespace

BoundsAudit audit_polygon_bounds(const std::vector<Vec2>& poly, int samples, std::uint64_t seed) {
    const PolygonConstants pc = polygon_bound_constants(poly);
    const double area = polygon_area(poly);
    BoundsAudit audit;
    audit.samples = samples;
    std::atomic<int> up{0}, lo{0};
#pragma omp parallel for schedule(static)
    for (int i = 0; i < samples; ++i) {
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * std::uint64_t(i + 1));
        const Mat2 l = random_macro_gradient(rng);
        const double sigma = noise_sigma(i);
        std::vector<Vec2> def(poly.size());
        for (size_t v = 0; v < poly.size(); ++v)
            def[v] = l * poly[v] + Vec2(rng.normal(0, sigma), rng.normal(0, sigma));
        const double e = polygon_energy(poly, def);
        const double x = polygon_fan_gradient_sq(poly, def);
        if (e > pc.c1 * (x + area) * (1 + 1e-12) + 1e-12) ++up;
        if (e < pc.c2 * x - pc.c3 * area - 1e-12) ++lo;
    }
    audit.violations_upper = up;
    audit.violations_lower = lo;
    return audit;
}

BoundsAudit audit_triangle_chain_bound(const Vec2& a, const Vec2& b, const Vec2& c, int samples,
                                       std::uint64_t seed) {
    const double m = std::max((a - b).norm(), (b - c).norm());
    const double gamma = 6.0 * m * m;
    BoundsAudit audit;
    audit.samples = samples;
    std::atomic<int> up{0};
#pragma omp parallel for schedule(static)
    for (int i = 0; i < samples; ++i) {
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * std::uint64_t(i + 1));
        const Mat2 l = random_macro_gradient(rng);
        const double sigma = noise_sigma(i);
        auto sample = [&](const Vec2& p) {
            return Vec2(l * p + Vec2(rng.normal(0, sigma), rng.normal(0, sigma)));
        };
        const Vec2 ua = sample(a), ub = sample(b), uc = sample(c);
        auto es = [](const Vec2& ru, const Vec2& rv, const Vec2& u, const Vec2& v) {
            const double d = (u - v).norm() - (ru - rv).norm();
            return d * d;
        };
        const double e_ac = es(a, c, ua, uc);
        const double e_ab = es(a, b, ua, ub);
        const double e_bc = es(b, c, ub, uc);
        if (e_ac > 3.0 * (gamma + e_ab + e_bc) * (1 + 1e-12) + 1e-12) ++up;
    }
    audit.violations_upper = up;
    return audit;
}

BoundsAudit audit_cell_bounds(const LatticeSpec& spec, int samples, std::uint64_t seed) {
    const BoundConstants bc = cell_bound_constants(spec);
    const int n = spec.reach.n;
    const double un_area = double((2 * n - 1) * (2 * n - 1)) * spec.cell_volume;
    const PenaltyFunction pf{spec.eta, 0.0};

    CellSet window;
    window.epsilon = 1;
    for (int i = -(n - 1); i <= n - 1; ++i)
        for (int j = -(n - 1); j <= n - 1; ++j) window.offsets.push_back({i, j});
    std::sort(window.offsets.begin(), window.offsets.end());
    size_t center = 0;
    for (size_t i = 0; i < window.offsets.size(); ++i)
        if (window.offsets[i] == std::array<int, 2>{0, 0}) center = i;

    BoundsAudit audit;
    audit.samples = samples;
    std::atomic<int> up{0}, lo{0};
#pragma omp parallel for schedule(static)
    for (int s = 0; s < samples; ++s) {
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * std::uint64_t(s + 1));
        const Mat2 l = random_macro_gradient(rng);
        const double sigma = noise_sigma(s);
        Deformation def;
        def.epsilon = 1;
        def.window = window;
        for (const auto& cell : window.offsets)
            for (const auto& [b, dd] : spec.node_stencil_m) {
                const NodeRef r{b, {dd[0] + cell[0], dd[1] + cell[1]}};
                if (!def.values.count(r))
                    def.set(r, Vec2(l * node_position(spec, r, 1.0) +
                                    Vec2(rng.normal(0, sigma), rng.normal(0, sigma))));
            }
        const double e = cell_energy(def, spec, pf, {0, 0}, 1.0).total;
        const PiecewiseLinearField field = linearize(def, spec);
        const double x_un = l2_gradient_norm_sq(field);
        const double x_u = l2_gradient_norm_sq(field, {center});
        if (e > bc.C1 * (x_un + un_area) * (1 + 1e-12) + 1e-12) ++up;
        const double lower = std::max(bc.C2 * (x_u - bc.D2 * spec.cell_volume), 0.0);
        if (e < lower - 1e-12) ++lo;
    }
    audit.violations_upper = up;
    audit.violations_lower = lo;
    return audit;
}

// ---- rank-one convexity --------------------------------------------------------

namespace {

DensityEstimate best_estimate(const LatticeSpec& spec, const DensityQuery& base, const Mat2& l,
                              const std::vector<PeriodicState>& extra) {
    DensityQuery q = base;
    q.lambda = l;
    DensityEstimate best;
    bool first = true;
    for (int k : q.k_schedule)
        for (BcMode bc : q.bc_modes) {
            DensityEstimate est = minimize_density(spec, q, k, bc, extra);
            if (first || est.value_exact < best.value_exact) {
                best = std::move(est);
                first = false;
            }
        }
    return best;
}

}  // namespace

RankOneReport rank_one_convexity_check(const LatticeSpec& spec, const Mat2& a_mat, const Vec2& a,
                                       const Vec2& n, const std::vector<double>& thetas,
                                       const DensityQuery& query) {
    const Mat2 b_mat = a_mat + a * n.transpose();
    {
        Eigen::JacobiSVD<Mat2> svd(Mat2(b_mat - a_mat));
        if (svd.singularValues()(1) > 1e-12)
            throw std::invalid_argument("rank_one_convexity_check: B - A is not rank one");
    }
    RankOneReport rep;
    rep.a_mat = a_mat;
    rep.b_mat = b_mat;
    const DensityEstimate ea = best_estimate(spec, query, a_mat, {});
    const DensityEstimate eb = best_estimate(spec, query, b_mat, {});
    rep.w_a = ea.value_exact;
    rep.w_b = eb.value_exact;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    const double scale = std::max(1.0, a_mat.norm() + b_mat.norm());
    for (double th : thetas) {
        rep.thetas.push_back(th);
        const Mat2 mid = th * a_mat + (1.0 - th) * b_mat;
        double w_mid;
        if ((mid - b_mat).norm() <= 1e-15 * scale) w_mid = rep.w_b;
        else if ((mid - a_mat).norm() <= 1e-15 * scale) w_mid = rep.w_a;
        else
            w_mid = best_estimate(spec, query, mid, {ea.minimizer, eb.minimizer}).value_exact;
        rep.w_mid.push_back(w_mid);
        const double viol = w_mid - (th * rep.w_a + (1.0 - th) * rep.w_b);
        rep.violations.push_back(viol);
        rep.max_violation = std::max(rep.max_violation, viol);
    }
    return rep;
}

// ---- recovery sequences ---------------------------------------------------------

double state_average_density(const LatticeSpec& spec, const Mat2& lambda,
                             const PeriodicState& psi) {
    Deformation def;
    def.epsilon = 1;
    for (int i = 0; i < psi.period[0]; ++i)
        for (int j = 0; j < psi.period[1]; ++j) def.window.offsets.push_back({i, j});
    for (const auto& cell : def.window.offsets)
        for (const auto& [b, d] : spec.node_stencil_m) {
            const NodeRef r{b, {d[0] + cell[0], d[1] + cell[1]}};
            if (!def.values.count(r))
                def.set(r, Vec2(lambda * node_position(spec, r, 1.0) + psi.psi_at(r)));
        }
    const PenaltyFunction pf{spec.eta, 0.0};
    double total = 0;
    for (const auto& cell : def.window.offsets)
        total += cell_energy(def, spec, pf, cell, 1.0).total;
    return total / (double(psi.period[0]) * double(psi.period[1]) * spec.cell_volume);
}

ConvergenceReport recovery_sequence_energy(const LatticeSpec& spec, const Mat2& lambda,
                                           const PeriodicState& psi, bool psi_is_zero_boundary,
                                           const Domain& domain,
                                           const std::vector<double>& epsilons) {
    for (size_t i = 0; i + 1 < epsilons.size(); ++i)
        if (epsilons[i + 1] >= epsilons[i])
            throw std::invalid_argument("recovery_sequence_energy: epsilons must descend");

    ConvergenceReport rep;
    rep.target = domain.area() * state_average_density(spec, lambda, psi);
    const PenaltyFunction pf{spec.eta, 0.0};

    for (double eps : epsilons) {
        const CellSet cells = cells_in_domain(spec, domain, eps);
        Deformation def;
        def.epsilon = eps;
        def.window = cells;

        std::map<std::array<int, 2>, bool> tile_ok;
        auto tile_included = [&](const std::array<int, 2>& tile) {
            auto it = tile_ok.find(tile);
            if (it != tile_ok.end()) return it->second;
            const double layer = eps * spec.reach.d_m;
            bool ok = true;
            for (int ci = 0; ci < psi.period[0] && ok; ++ci)
                for (int cj = 0; cj < psi.period[1] && ok; ++cj) {
                    const Vec2 shift = spec.cell_vectors *
                                       Vec2(double(tile[0] * psi.period[0] + ci),
                                            double(tile[1] * psi.period[1] + cj));
                    for (const Vec2& corner : spec.cell.corners())
                        if (domain.inside_distance(eps * (corner + shift)) <=
                            layer + 1e-12 * domain.diameter()) {
                            ok = false;
                            break;
                        }
                }
            tile_ok[tile] = ok;
            return ok;
        };
        auto floor_div = [](int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };

        for (const auto& cell : cells.offsets)
            for (const auto& [b, d] : spec.node_stencil_m) {
                const NodeRef r{b, {d[0] + cell[0], d[1] + cell[1]}};
                if (def.values.count(r)) continue;
                const Vec2 pos = node_position(spec, r, eps);
                bool apply = true;
                if (psi_is_zero_boundary) {
                    const std::array<int, 2> tile = {floor_div(r.offset[0], psi.period[0]),
                                                     floor_div(r.offset[1], psi.period[1])};
                    apply = tile_included(tile);
                }
                def.set(r, apply ? Vec2(lambda * pos + eps * psi.psi_at(r)) : Vec2(lambda * pos));
            }

        const double e = domain_energy(def, spec, pf, domain, eps).total;
        rep.epsilons.push_back(eps);
        rep.energies.push_back(e);
        rep.gaps.push_back(std::abs(e - rep.target));
    }

    std::vector<double> lx, ly;
    for (size_t i = 0; i < rep.gaps.size(); ++i)
        if (rep.gaps[i] > 1e-14) {
            lx.push_back(std::log(rep.epsilons[i]));
            ly.push_back(std::log(rep.gaps[i]));
        }
    rep.fitted_rate = lx.size() >= 2 ? fit_slope(lx, ly) : 0.0;
    return rep;
}

// ---- soft modes ------------------------------------------------------------------

SoftModeReport soft_mode_experiment(const LatticeSpec& spec, const Mat2& f_matrix,
                                    const Domain& domain, const std::vector<double>& epsilons,
                                    const OptimizerConfig& opt) {
    SoftModeReport rep;
    rep.f_matrix = f_matrix;
    const BoundConstants bc = cell_bound_constants(spec);
    rep.jensen_floor = bc.C2 * (f_matrix.squaredNorm() - bc.D2) * domain.area();
    const double tau = opt.smoothing_tau;

    for (double eps : epsilons) {
        const AssembledProblem prob = assemble_dirichlet(spec, domain, eps);
        const double baseline = prob.exact_value(f_matrix, prob.zero_start());

        std::vector<Eigen::VectorXd> starts;
        starts.push_back(prob.zero_start());
        // Mechanism-informed starts: corrector ramped to zero toward the
        // pinned layer so the Dirichlet condition holds exactly.
        const double layer = eps * spec.reach.d_m;
        const double ramp = std::max(1.0, 4.0 * layer);
        for (const PeriodicState& mech : mechanism_starts(spec, f_matrix)) {
            auto psi_fn = [&](const NodeRef& r) {
                const Vec2 pos = node_position(spec, r, eps);
                const double rho =
                    std::clamp((domain.inside_distance(pos) - layer) / ramp, 0.0, 1.0);
                return Vec2(eps * rho * mech.psi_at(r));
            };
            starts.push_back(prob.encode(psi_fn));
        }
        const double sigma = opt.sigma_scale * spec.min_node_spacing * eps;
        for (const std::uint64_t seed : opt.effective_seeds()) {
            Rng rng(seed);
            Eigen::VectorXd x(prob.dof_count());
            for (long i = 0; i < x.size(); ++i) x[i] = rng.normal(0, sigma);
            starts.push_back(std::move(x));
        }

        double best = baseline;
        const LbfgsOptions lopt = opt.lbfgs_options();
        for (const auto& x0 : starts) {
            best = std::min(best, prob.exact_value(f_matrix, x0));
            auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
                return prob.eval(f_matrix, x, tau, &g);
            };
            const LbfgsResult res = lbfgs_minimize(fg, x0, lopt);
            best = std::min(best, prob.exact_value(f_matrix, res.x));
        }
        rep.epsilons.push_back(eps);
        rep.baselines.push_back(baseline);
        rep.energies.push_back(best);
        rep.dof_counts.push_back(prob.dof_count());
    }
    rep.nonincreasing = true;
    for (size_t i = 0; i + 1 < rep.energies.size(); ++i)
        if (rep.energies[i + 1] > rep.energies[i] * (1 + 1e-12)) rep.nonincreasing = false;
    return rep;
}

// ---- Lipschitz diagnostics --------------------------------------------------------

double default_lipschitz_c3(const LatticeSpec& spec) {
    const BoundConstants bc = cell_bound_constants(spec);
    const int n = spec.reach.n;
    return bc.C1 * double((2 * n - 1) * (2 * n - 1));
}

std::vector<LipschitzCheck> lipschitz_report(const LatticeSpec& spec, int pairs,
                                             std::uint64_t seed, const DensityQuery& query,
                                             double c3, double slack) {
    std::vector<LipschitzCheck> out;
    Rng rng(seed);
    for (int i = 0; i < pairs; ++i) {
        LipschitzCheck chk;
        chk.lambda = random_macro_gradient(rng);
        Mat2 delta;
        delta << rng.normal(0, 0.2), rng.normal(0, 0.2), rng.normal(0, 0.2), rng.normal(0, 0.2);
        chk.mu = chk.lambda + delta;
        const DensityEstimate el = best_estimate(spec, query, chk.lambda, {});
        const DensityEstimate em =
            best_estimate(spec, query, chk.mu, {el.minimizer});
        chk.w_lambda = el.value_exact;
        chk.w_mu = em.value_exact;
        chk.bound = c3 * (1.0 + chk.lambda.norm() + chk.mu.norm()) * (chk.mu - chk.lambda).norm() +
                    2.0 * slack;
        chk.violated = std::abs(chk.w_lambda - chk.w_mu) > chk.bound;
        out.push_back(chk);
    }
    return out;
}

}  // namespace latmet
