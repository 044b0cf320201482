#include "latmet/cellproblem.hpp"

#include "latmet/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>

namespace latmet {

std::string bc_name(BcMode bc) {
    return bc == BcMode::ZeroBoundary ? "zero" : "periodic";
}

LbfgsOptions OptimizerConfig::lbfgs_options() const {
    LbfgsOptions o;
    o.max_iterations = max_iterations;
    o.grad_tolerance = gradient_tolerance;
    return o;
}

std::vector<std::uint64_t> OptimizerConfig::effective_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> s;
    for (int i = 1; i <= multistart; ++i) s.push_back(std::uint64_t(i));
    return s;
}

namespace {

int wrap_mod(int a, int p) {
    const int r = a % p;
    return r < 0 ? r + p : r;
}

}  // namespace

Vec2 PeriodicState::psi_at(const NodeRef& ref) const {
    const NodeRef w{ref.basic,
                    {wrap_mod(ref.offset[0], period[0]), wrap_mod(ref.offset[1], period[1])}};
    auto it = psi.find(w);
    return it == psi.end() ? Vec2::Zero() : it->second;
}

Vec2 PeriodicState::displacement(const LatticeSpec& spec, const NodeRef& ref,
                                 double epsilon) const {
    return F * node_position(spec, ref, epsilon) + epsilon * psi_at(ref);
}

PeriodicState PeriodicState::rotated(const Mat2& r) const {
    PeriodicState out = *this;
    out.F = r * F;
    for (auto& [ref, v] : out.psi) v = r * v;
    return out;
}

// ---- region boundary --------------------------------------------------------

std::vector<std::pair<Vec2, Vec2>> region_boundary_segments(
    const LatticeSpec& spec, const std::vector<std::array<int, 2>>& cells) {
    struct Seg {
        Vec2 a, b;
    };
    std::vector<Seg> edges;
    for (const auto& off : cells) {
        const Vec2 shift = spec.cell_vectors * Vec2(double(off[0]), double(off[1]));
        const auto cs = spec.cell.corners();
        for (int e = 0; e < 4; ++e)
            edges.push_back({cs[size_t(e)] + shift, cs[size_t((e + 1) % 4)] + shift});
    }
    const double tol = 1e-9 * std::max(1.0, spec.cell_vectors.norm());
    std::vector<std::pair<Vec2, Vec2>> out;
    for (size_t i = 0; i < edges.size(); ++i) {
        const Vec2 a = edges[i].a, b = edges[i].b;
        const double len = (b - a).norm();
        const Vec2 dir = (b - a) / len;
        std::vector<std::pair<double, double>> covered;
        for (size_t j = 0; j < edges.size(); ++j) {
            if (j == i) continue;
            const Vec2 ra = edges[j].a - a, rb = edges[j].b - a;
            if (std::abs(dir.x() * ra.y() - dir.y() * ra.x()) > tol) continue;
            if (std::abs(dir.x() * rb.y() - dir.y() * rb.x()) > tol) continue;
            double t0 = ra.dot(dir), t1 = rb.dot(dir);
            if (t0 > t1) std::swap(t0, t1);
            t0 = std::max(t0, 0.0);
            t1 = std::min(t1, len);
            if (t1 - t0 > tol) covered.push_back({t0, t1});
        }
        std::sort(covered.begin(), covered.end());
        double cursor = 0;
        for (const auto& [t0, t1] : covered) {
            if (t0 - cursor > tol) out.push_back({a + cursor * dir, a + t0 * dir});
            cursor = std::max(cursor, t1);
        }
        if (len - cursor > tol) out.push_back({a + cursor * dir, a + len * dir});
    }
    return out;
}

double distance_to_segments(const Vec2& p, const std::vector<std::pair<Vec2, Vec2>>& segs) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : segs) d = std::min(d, segment_distance(p, a, b));
    return d;
}

// ---- assembly ---------------------------------------------------------------

namespace {

using Slot = AssembledProblem::Slot;

void build_terms(AssembledProblem& p, const LatticeSpec& spec,
                 const std::function<Slot(const NodeRef&)>& resolve) {
    const double eps = p.epsilon;
    size_t contrib = 0;
    p.cell_contrib_begin.push_back(0);
    for (const auto& cell : p.cells) {
        p.cell_spring_begin.push_back(p.springs.size());
        p.cell_pen_begin.push_back(p.penalties.size());
        p.cell_angle_begin.push_back(p.angles.size());
        for (const auto& s : spec.springs) {
            AssembledProblem::SpringEval se;
            se.a = resolve(s.a.shifted(cell));
            se.b = resolve(s.b.shifted(cell));
            se.rest = eps * s.rest_length;
            se.coeff = s.weight * s.stiffness;
            p.springs.push_back(se);
            contrib += 2;
        }
        for (int t : spec.penalty_triangles) {
            const Triangle& tri = spec.triangles[size_t(t)];
            AssembledProblem::PenEval pe;
            for (int kv = 0; kv < 3; ++kv) {
                const VertexRef& v = tri.v[size_t(kv)];
                AssembledProblem::PenVertexEval& pv = pe.v[size_t(kv)];
                pv.pos = spec.vertex_position(v, cell, eps);
                if (v.kind == VertexRef::Kind::Node) {
                    pv.contribs.push_back({1.0, resolve(v.node.shifted(cell))});
                } else {
                    for (const auto& [w, src] : spec.ghosts[size_t(v.ghost)].terms)
                        pv.contribs.push_back({w, resolve(src.shifted(cell))});
                }
                contrib += pv.contribs.size();
            }
            Mat2 dx;
            dx.col(0) = pe.v[0].pos - pe.v[1].pos;
            dx.col(1) = pe.v[0].pos - pe.v[2].pos;
            const double det = dx.determinant();
            Mat2 inv;
            inv << dx(1, 1), -dx(0, 1), -dx(1, 0), dx(0, 0);
            pe.pinv = inv / det;
            pe.scale = eps * eps;
            if (spec.penalty_weighting == PenaltyWeighting::AreaWeighted) {
                const Vec2 a = spec.vertex_position(tri.v[0], {0, 0}, 1.0);
                const Vec2 b = spec.vertex_position(tri.v[1], {0, 0}, 1.0);
                const Vec2 c = spec.vertex_position(tri.v[2], {0, 0}, 1.0);
                pe.scale *= std::abs(triangle_signed_area(a, b, c));
            }
            p.penalties.push_back(pe);
        }
        for (const auto& a : spec.angle_terms) {
            AssembledProblem::AngleEval ae;
            ae.apex = resolve(a.apex.shifted(cell));
            ae.a1 = resolve(a.arm1.shifted(cell));
            ae.a2 = resolve(a.arm2.shifted(cell));
            ae.form = a.form;
            ae.preferred_cosine = a.preferred_cosine;
            ae.theta0 = a.theta0;
            ae.strength = a.strength;
            p.angles.push_back(ae);
            contrib += 3;
        }
        p.cell_contrib_begin.push_back(contrib);
    }
    p.cell_spring_begin.push_back(p.springs.size());
    p.cell_pen_begin.push_back(p.penalties.size());
    p.cell_angle_begin.push_back(p.angles.size());
}

}  // namespace

AssembledProblem assemble_supercell(const LatticeSpec& spec, int k, BcMode bc, bool gauge_pin) {
    if (k < 1) throw std::invalid_argument("assemble_supercell: k must be >= 1");
    AssembledProblem p;
    p.spec = &spec;
    p.k = k;
    p.bc = bc;
    p.epsilon = 1;
    p.eta = spec.eta;
    p.normalization = double(k) * double(k) * spec.cell_volume;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) p.cells.push_back({i, j});
    std::sort(p.cells.begin(), p.cells.end());

    const int nb = int(spec.basic_nodes.size());
    if (bc == BcMode::Periodic) {
        p.gauge_pinned = gauge_pin;
        p.gauge_node = NodeRef{0, {0, 0}};
        for (int b = 0; b < nb; ++b)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    const NodeRef r{b, {i, j}};
                    if (gauge_pin && r == p.gauge_node) continue;
                    p.dof_of[r] = int(p.free_nodes.size()) * 2;
                    p.free_nodes.push_back(r);
                }
        auto resolve = [&p, &spec, k](const NodeRef& ref) {
            Slot s;
            s.pos = node_position(spec, ref, 1.0);
            const NodeRef w{ref.basic, {wrap_mod(ref.offset[0], k), wrap_mod(ref.offset[1], k)}};
            auto it = p.dof_of.find(w);
            s.dof = it == p.dof_of.end() ? -1 : it->second;
            return s;
        };
        build_terms(p, spec, resolve);
    } else {
        const auto boundary = region_boundary_segments(spec, p.cells);
        for (int b = 0; b < nb; ++b)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    const NodeRef r{b, {i, j}};
                    const Vec2 pos = node_position(spec, r, 1.0);
                    if (distance_to_segments(pos, boundary) <= spec.reach.d_m) continue;
                    p.dof_of[r] = int(p.free_nodes.size()) * 2;
                    p.free_nodes.push_back(r);
                }
        auto resolve = [&p, &spec](const NodeRef& ref) {
            Slot s;
            s.pos = node_position(spec, ref, 1.0);
            auto it = p.dof_of.find(ref);
            s.dof = it == p.dof_of.end() ? -1 : it->second;
            return s;
        };
        build_terms(p, spec, resolve);
    }
    return p;
}

AssembledProblem assemble_dirichlet(const LatticeSpec& spec, const Domain& domain,
                                    double epsilon) {
    AssembledProblem p;
    p.spec = &spec;
    p.k = 0;
    p.bc = BcMode::ZeroBoundary;
    p.epsilon = epsilon;
    p.eta = spec.eta;
    p.normalization = 1.0;
    p.cells = cells_in_domain(spec, domain, epsilon).offsets;

    // Collect every node reference the energy reads over these cells.
    std::set<std::array<int, 3>> used;
    auto note = [&](const NodeRef& r) { used.insert({r.basic, r.offset[0], r.offset[1]}); };
    for (const auto& cell : p.cells) {
        for (const auto& s : spec.springs) {
            note(s.a.shifted(cell));
            note(s.b.shifted(cell));
        }
        for (int t : spec.penalty_triangles)
            for (const auto& v : spec.triangles[size_t(t)].v) {
                if (v.kind == VertexRef::Kind::Node) note(v.node.shifted(cell));
                else
                    for (const auto& [w, src] : spec.ghosts[size_t(v.ghost)].terms)
                        note(src.shifted(cell));
            }
        for (const auto& a : spec.angle_terms) {
            note(a.apex.shifted(cell));
            note(a.arm1.shifted(cell));
            note(a.arm2.shifted(cell));
        }
    }
    const double layer = epsilon * spec.reach.d_m;
    for (const auto& [b, i, j] : used) {
        const NodeRef r{b, {i, j}};
        const Vec2 pos = node_position(spec, r, epsilon);
        if (domain.inside_distance(pos) <= layer) continue;
        p.dof_of[r] = int(p.free_nodes.size()) * 2;
        p.free_nodes.push_back(r);
    }
    auto resolve = [&p, &spec, epsilon](const NodeRef& ref) {
        Slot s;
        s.pos = node_position(spec, ref, epsilon);
        auto it = p.dof_of.find(ref);
        s.dof = it == p.dof_of.end() ? -1 : it->second;
        return s;
    };
    build_terms(p, spec, resolve);
    return p;
}

// ---- objective --------------------------------------------------------------

double AssembledProblem::eval(const Mat2& lambda, const Eigen::VectorXd& x, double tau,
                              Eigen::VectorXd* grad) const {
    if (grad && tau <= 0)
        throw std::runtime_error("AssembledProblem::eval: gradients need smoothing tau > 0");
    const PenaltyFunction pf{eta, tau};
    const size_t nc = cells.size();
    std::vector<double> cell_e(nc, 0.0);
    std::vector<std::pair<int, Vec2>> contrib;
    if (grad) {
        grad->setZero(dof_count());
        contrib.assign(cell_contrib_begin.back(), {-1, Vec2::Zero()});
    }
    std::atomic<bool> bad_angle{false};

#pragma omp parallel for schedule(static)
    for (long ci = 0; ci < long(nc); ++ci) {
        const size_t c = size_t(ci);
        double e = 0;
        size_t w = grad ? cell_contrib_begin[c] : 0;
        auto psi = [&](const Slot& s) {
            return s.dof >= 0 ? Vec2(x[s.dof], x[s.dof + 1]) : Vec2(Vec2::Zero());
        };
        auto uval = [&](const Slot& s) { return Vec2(lambda * s.pos + psi(s)); };

        for (size_t i = cell_spring_begin[c]; i < cell_spring_begin[c + 1]; ++i) {
            const SpringEval& s = springs[i];
            const Vec2 d = uval(s.a) - uval(s.b);
            const double len = d.norm();
            const double r = len - s.rest;
            e += s.coeff * r * r;
            if (grad) {
                const Vec2 g = len > 0 ? Vec2(2.0 * s.coeff * r / len * d) : Vec2(Vec2::Zero());
                contrib[w++] = {s.a.dof, g};
                contrib[w++] = {s.b.dof, -g};
            }
        }
        for (size_t i = cell_pen_begin[c]; i < cell_pen_begin[c + 1]; ++i) {
            const PenEval& pe = penalties[i];
            std::array<Vec2, 3> u;
            for (int kv = 0; kv < 3; ++kv) {
                Vec2 val = lambda * pe.v[size_t(kv)].pos;
                for (const auto& [cw, slot] : pe.v[size_t(kv)].contribs) val += cw * psi(slot);
                u[size_t(kv)] = val;
            }
            Mat2 du;
            du.col(0) = u[0] - u[1];
            du.col(1) = u[0] - u[2];
            const Mat2 g = du * pe.pinv;
            const double det = g.determinant();
            e += pf.value(det) * pe.scale;
            if (grad) {
                Mat2 cof;
                cof << g(1, 1), -g(1, 0), -g(0, 1), g(0, 0);
                const Mat2 d_du = (pf.derivative(det) * pe.scale) * cof * pe.pinv.transpose();
                const std::array<Vec2, 3> dvert = {Vec2(d_du.col(0) + d_du.col(1)),
                                                   Vec2(-d_du.col(0)), Vec2(-d_du.col(1))};
                for (int kv = 0; kv < 3; ++kv)
                    for (const auto& [cw, slot] : pe.v[size_t(kv)].contribs)
                        contrib[w++] = {slot.dof, cw * dvert[size_t(kv)]};
            }
        }
        for (size_t i = cell_angle_begin[c]; i < cell_angle_begin[c + 1]; ++i) {
            const AngleEval& a = angles[i];
            const Vec2 up = uval(a.apex);
            const Vec2 l1 = uval(a.a1) - up;
            const Vec2 l2 = uval(a.a2) - up;
            Vec2 d1 = Vec2::Zero(), d2 = Vec2::Zero();
            if (a.form == AngleForm::AbsoluteCosine) {
                const double n1 = l1.norm(), n2 = l2.norm();
                const double gval = l1.dot(l2) - n1 * n2 * a.preferred_cosine;
                e += a.strength * std::abs(gval);
                if (grad) {
                    const double sg = gval > 0 ? 1.0 : (gval < 0 ? -1.0 : 0.0);
                    d1 = a.strength * sg *
                         (l2 - (n1 > 0 ? Vec2(a.preferred_cosine * n2 / n1 * l1) : Vec2(Vec2::Zero())));
                    d2 = a.strength * sg *
                         (l1 - (n2 > 0 ? Vec2(a.preferred_cosine * n1 / n2 * l2) : Vec2(Vec2::Zero())));
                }
            } else {
                const double den = l1.squaredNorm() * l2.squaredNorm();
                if (den == 0) {
                    bad_angle = true;
                    continue;
                }
                const double cr = l1.x() * l2.y() - l1.y() * l2.x();
                const double dot = l1.dot(l2);
                const double theta = std::atan2(cr, dot);
                const double dd = theta - a.theta0;
                e += a.strength * dd * dd * epsilon * epsilon;
                if (grad) {
                    const double cc = 2.0 * a.strength * dd * epsilon * epsilon;
                    const Vec2 dcr_d1(l2.y(), -l2.x()), dcr_d2(-l1.y(), l1.x());
                    d1 = cc * (dot * dcr_d1 - cr * l2) / den;
                    d2 = cc * (dot * dcr_d2 - cr * l1) / den;
                }
            }
            if (grad) {
                contrib[w++] = {a.a1.dof, d1};
                contrib[w++] = {a.a2.dof, d2};
                contrib[w++] = {a.apex.dof, -(d1 + d2)};
            }
        }
        cell_e[c] = e;
    }
    if (bad_angle)
        throw std::runtime_error("AssembledProblem::eval: zero-length torsional arm");

    double total = 0;
    for (size_t c = 0; c < nc; ++c) total += cell_e[c];
    total /= normalization;
    if (grad) {
        for (size_t c = 0; c < nc; ++c)
            for (size_t i = cell_contrib_begin[c]; i < cell_contrib_begin[c + 1]; ++i) {
                const auto& [dof, v] = contrib[i];
                if (dof < 0) continue;
                (*grad)[dof] += v.x() / normalization;
                (*grad)[dof + 1] += v.y() / normalization;
            }
    }
    return total;
}

Eigen::VectorXd AssembledProblem::encode(const std::function<Vec2(const NodeRef&)>& psi) const {
    Eigen::VectorXd x(dof_count());
    const Vec2 shift = gauge_pinned ? psi(gauge_node) : Vec2(Vec2::Zero());
    for (size_t i = 0; i < free_nodes.size(); ++i) {
        const Vec2 v = psi(free_nodes[i]) - shift;
        x[long(2 * i)] = v.x();
        x[long(2 * i + 1)] = v.y();
    }
    return x;
}

Eigen::VectorXd AssembledProblem::encode(const PeriodicState& state) const {
    return encode([&state](const NodeRef& r) { return state.psi_at(r); });
}

PeriodicState AssembledProblem::decode(const Mat2& lambda, const Eigen::VectorXd& x) const {
    if (k < 1) throw std::runtime_error("AssembledProblem::decode: not a supercell problem");
    PeriodicState st;
    st.F = lambda;
    st.period = {k, k};
    for (int b = 0; b < int(spec->basic_nodes.size()); ++b)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                const NodeRef r{b, {i, j}};
                auto it = dof_of.find(r);
                st.psi[r] = it == dof_of.end() ? Vec2(Vec2::Zero())
                                               : Vec2(x[it->second], x[it->second + 1]);
            }
    return st;
}

// ---- density minimization ----------------------------------------------------

DensityEstimate minimize_density(const LatticeSpec& spec, const DensityQuery& query, int k,
                                 BcMode bc, const std::vector<PeriodicState>& extra_starts) {
    const AssembledProblem prob = assemble_supercell(spec, k, bc, query.opt.gauge_pin);
    const Mat2 lambda = query.lambda;
    const double tau = query.opt.smoothing_tau;

    std::vector<Eigen::VectorXd> starts;
    starts.push_back(prob.zero_start());
    for (const auto& st : mechanism_starts(spec, lambda)) starts.push_back(prob.encode(st));
    for (const auto& st : extra_starts) starts.push_back(prob.encode(st));
    const double sigma = query.opt.sigma_scale * spec.min_node_spacing;
    for (const std::uint64_t seed : query.opt.effective_seeds()) {
        Rng rng(seed);
        Eigen::VectorXd x(prob.dof_count());
        for (long i = 0; i < x.size(); ++i) x[i] = rng.normal(0, sigma);
        starts.push_back(std::move(x));
    }

    DensityEstimate best;
    best.k = k;
    best.bc = bc;
    best.lambda = lambda;
    best.starts_tried = int(starts.size());
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;

    const LbfgsOptions lopt = query.opt.lbfgs_options();
    for (size_t s = 0; s < starts.size(); ++s) {
        const double e_start = prob.exact_value(lambda, starts[s]);
        if (!std::isfinite(e_start))
            throw std::runtime_error("minimize_density: non-finite objective at a start point");
        if (e_start < best_val) {
            best_val = e_start;
            best_x = starts[s];
            best.best_start = int(s);
            best.iterations = 0;
        }
        auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
            return prob.eval(lambda, x, tau, &g);
        };
        const LbfgsResult res = lbfgs_minimize(fg, starts[s], lopt);
        const double e_end = prob.exact_value(lambda, res.x);
        if (!std::isfinite(e_end))
            throw std::runtime_error("minimize_density: non-finite objective after descent");
        if (e_end < best_val) {
            best_val = e_end;
            best_x = res.x;
            best.best_start = int(s);
            best.iterations = res.iterations;
        }
    }

    best.value_exact = best_val;
    best.value_smoothed = prob.eval(lambda, best_x, tau, nullptr);
    if (prob.dof_count() > 0) {
        Eigen::VectorXd g;
        prob.eval(lambda, best_x, tau, &g);
        best.grad_norm = g.lpNorm<Eigen::Infinity>();
    }
    best.minimizer = prob.decode(lambda, best_x);
    return best;
}

DensityTable effective_density(const LatticeSpec& spec, const DensityQuery& query) {
    DensityTable table;
    std::vector<PeriodicState> warm;  // best minimizer from smaller k
    std::vector<int> ks = query.k_schedule;
    if (ks.empty()) throw std::invalid_argument("effective_density: empty k schedule");
    if (!std::is_sorted(ks.begin(), ks.end()))
        throw std::invalid_argument("effective_density: k schedule must ascend");

    const bool want_zero = std::count(query.bc_modes.begin(), query.bc_modes.end(),
                                      BcMode::ZeroBoundary) > 0;
    const bool want_per = std::count(query.bc_modes.begin(), query.bc_modes.end(),
                                     BcMode::Periodic) > 0;
    for (int k : ks) {
        std::vector<PeriodicState> zero_min;
        if (want_zero) {
            DensityEstimate est = minimize_density(spec, query, k, BcMode::ZeroBoundary, warm);
            zero_min.push_back(est.minimizer);
            table.rows.push_back(std::move(est));
        }
        if (want_per) {
            std::vector<PeriodicState> extra = warm;
            extra.insert(extra.end(), zero_min.begin(), zero_min.end());
            table.rows.push_back(minimize_density(spec, query, k, BcMode::Periodic, extra));
        }
        // Keep the best minimizer so far as the warm start for larger k.
        size_t bi = 0;
        for (size_t i = 1; i < table.rows.size(); ++i)
            if (table.rows[i].value_exact < table.rows[bi].value_exact) bi = i;
        warm = {table.rows[bi].minimizer};
        table.best_index = bi;
    }
    return table;
}

// ---- mechanisms ---------------------------------------------------------------

MechanismReport verify_mechanism(const LatticeSpec& spec, const PeriodicState& state,
                                 double tolerance) {
    MechanismReport rep;
    rep.min_penalty_det = std::numeric_limits<double>::infinity();

    Deformation def;
    def.epsilon = 1;
    for (int i = 0; i < state.period[0]; ++i)
        for (int j = 0; j < state.period[1]; ++j) def.window.offsets.push_back({i, j});
    for (const auto& cell : def.window.offsets)
        for (const auto& [b, d] : spec.node_stencil_m) {
            const NodeRef r{b, {d[0] + cell[0], d[1] + cell[1]}};
            if (!def.values.count(r)) def.set(r, state.displacement(spec, r, 1.0));
        }

    for (const auto& cell : def.window.offsets) {
        for (const auto& s : spec.springs) {
            const Vec2 ua = def.value(spec, s.a.shifted(cell));
            const Vec2 ub = def.value(spec, s.b.shifted(cell));
            rep.max_spring_violation =
                std::max(rep.max_spring_violation, std::abs((ua - ub).norm() - s.rest_length));
        }
        for (int t : spec.penalty_triangles) {
            const double det = cell_triangle_gradient(def, spec, cell, t, 1.0).determinant();
            rep.min_penalty_det = std::min(rep.min_penalty_det, det);
            if (det <= 0) ++rep.reversed_triangles;
        }
    }
    if (spec.penalty_triangles.empty()) rep.min_penalty_det = 1.0;
    rep.ok = rep.max_spring_violation <= tolerance && rep.min_penalty_det > 0;
    return rep;
}

PeriodicState twisted_kagome_state(const LatticeSpec& spec, double theta) {
    if (spec.name != "kagome")
        throw std::invalid_argument("twisted_kagome_state: needs the kagome catalog lattice");
    const double limit = M_PI / 3.0;
    if (!(theta > -limit && theta < limit))
        throw std::invalid_argument(
            "twisted_kagome_state: theta outside the non-self-intersecting range (-pi/3, pi/3)");
    // Vector from each basic node to the centroid of its "up" material
    // triangle; the mechanism rotates that triangle rigidly.
    const double r3 = std::sqrt(3.0);
    const std::array<Vec2, 3> arm = {Vec2(0.5, -r3 / 6.0), Vec2(0.0, r3 / 3.0),
                                     Vec2(-0.5, -r3 / 6.0)};
    PeriodicState st;
    st.F = std::cos(theta) * rotation(theta);
    st.period = {1, 1};
    const Mat2 m = std::sin(theta) * rotation(theta);
    for (int b = 0; b < 3; ++b) st.psi[NodeRef{b, {0, 0}}] = m * rot90(arm[size_t(b)]);
    return st;
}

namespace {

PeriodicState fold_state(const LatticeSpec& spec, long p, long q, bool along_x) {
    if (spec.name != "square" && spec.name != "square-long-range")
        throw std::invalid_argument("accordion_fold_state: needs the square catalog lattice");
    if (q <= 0 || p < 0 || p > q)
        throw std::invalid_argument("accordion_fold_state: need a rational c = p/q in [0,1]");
    const long g = std::gcd(p, q);
    p /= g;
    q /= g;
    const long k = ((p + q) % 2 == 0) ? q : 2 * q;
    const long n_plus = (k * (q + p)) / (2 * q);
    const double c = double(p) / double(q);

    PeriodicState st;
    st.F = Mat2::Identity();
    st.F(along_x ? 0 : 1, along_x ? 0 : 1) = c;
    st.period = along_x ? std::array<int, 2>{int(k), 1} : std::array<int, 2>{1, int(k)};
    std::vector<double> s(size_t(k) + 1, 0.0);
    for (long i = 0; i < k; ++i) s[size_t(i) + 1] = s[size_t(i)] + (i < n_plus ? 1.0 : -1.0);
    for (long i = 0; i < k; ++i) {
        const double val = s[size_t(i)] - c * double(i);
        const NodeRef r{0, along_x ? std::array<int, 2>{int(i), 0}
                                   : std::array<int, 2>{0, int(i)}};
        st.psi[r] = along_x ? Vec2(val, 0) : Vec2(0, val);
    }
    return st;
}

bool rationalize(double c, long& p, long& q) {
    for (long qq = 1; qq <= 64; ++qq) {
        const long pp = std::lround(c * double(qq));
        if (pp < 0 || pp > qq) continue;
        if (std::abs(double(pp) / double(qq) - c) < 1e-9) {
            p = pp;
            q = qq;
            return true;
        }
    }
    return false;
}

}  // namespace

PeriodicState accordion_fold_state(const LatticeSpec& spec, long p, long q) {
    return fold_state(spec, p, q, true);
}

PeriodicState accordion_fold_state_y(const LatticeSpec& spec, long p, long q) {
    return fold_state(spec, p, q, false);
}

std::vector<PeriodicState> mechanism_starts(const LatticeSpec& spec, const Mat2& lambda) {
    std::vector<PeriodicState> out;
    if (spec.name == "kagome") {
        const auto conf = as_conformal(lambda, 1e-6);
        if (conf && conf->c <= 1.0 + 1e-9 && conf->c > 0.5 + 1e-9) {
            const double tm = std::acos(std::min(conf->c, 1.0));
            for (const double th : {tm, -tm}) {
                PeriodicState base = twisted_kagome_state(spec, th);
                out.push_back(base.rotated(rotation(conf->theta - th)));
            }
        }
    } else if (spec.name == "square" || spec.name == "square-long-range") {
        const double tol = 1e-9;
        if (std::abs(lambda(0, 1)) < tol && std::abs(lambda(1, 0)) < tol) {
            long p = 0, q = 0;
            if (std::abs(lambda(1, 1) - 1.0) < tol && lambda(0, 0) >= -tol &&
                lambda(0, 0) <= 1 + tol && rationalize(std::clamp(lambda(0, 0), 0.0, 1.0), p, q))
                out.push_back(fold_state(spec, p, q, true));
            if (std::abs(lambda(0, 0) - 1.0) < tol && lambda(1, 1) >= -tol &&
                lambda(1, 1) <= 1 + tol && rationalize(std::clamp(lambda(1, 1), 0.0, 1.0), p, q))
                out.push_back(fold_state(spec, p, q, false));
        }
    }
    return out;
}

}  // namespace latmet
