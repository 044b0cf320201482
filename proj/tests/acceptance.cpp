// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

#include "latmet/analysis.hpp"
#include "latmet/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace latmet;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::string&)> run;
};

bool expect(bool ok, const std::string& what, std::string& detail) {
    if (!ok) detail += (detail.empty() ? "" : "; ") + what;
    return ok;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Deformation random_cell_state(const LatticeSpec& spec, Rng& rng, double sigma) {
    Mat2 l;
    l << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2);
    Deformation def;
    def.window.offsets = {{0, 0}};
    def.epsilon = 1;
    for (const auto& [b, d] : spec.node_stencil_m)
        def.set({b, {d[0], d[1]}},
                Vec2(l * node_position(spec, {b, {d[0], d[1]}}, 1.0) +
                     Vec2(rng.normal(0, sigma), rng.normal(0, sigma))));
    return def;
}

// ---- criterion 1: exact invariances ----------------------------------------

bool criterion_invariances(std::string& detail) {
    bool ok = true;
    const int cases = 1000;
    for (const auto& entry : catalog_entries()) {
        const LatticeSpec spec = catalog(entry.name);
        const PenaltyFunction pf{spec.eta, 0};
        Rng rng(101);
        int bad_translation = 0, bad_period = 0, bad_frame = 0, bad_scaling = 0;
        for (int i = 0; i < cases; ++i) {
            const double sigma = (i % 3 == 0) ? 0.0 : (i % 3 == 1 ? 0.1 : 1.0);
            const Deformation def = random_cell_state(spec, rng, sigma);
            const double e0 = cell_energy(def, spec, pf, {0, 0}).total;
            const double tol = 1e-12 * std::max(1.0, e0);

            Deformation moved = def;
            const Vec2 c(rng.uniform(-5, 5), rng.uniform(-5, 5));
            for (auto& [ref, v] : moved.values) v += c;
            if (std::abs(cell_energy(moved, spec, pf, {0, 0}).total - e0) > tol)
                ++bad_translation;

            Deformation shifted;
            shifted.window = def.window;
            shifted.epsilon = 1;
            const std::array<int, 2> alpha = {3, -2};
            for (const auto& [ref, v] : def.values)
                shifted.set({ref.basic, {ref.offset[0] + alpha[0], ref.offset[1] + alpha[1]}}, v);
            if (std::abs(cell_energy(shifted, spec, pf, alpha).total - e0) > tol) ++bad_period;

            Deformation rotated = def;
            const Mat2 r = rotation(rng.uniform(0, 2 * M_PI));
            for (auto& [ref, v] : rotated.values) v = r * v;
            if (std::abs(cell_energy(rotated, spec, pf, {0, 0}).total - e0) > tol) ++bad_frame;

            const double eps = 0.5;
            Deformation scaled;
            scaled.window = def.window;
            scaled.epsilon = eps;
            for (const auto& [ref, v] : def.values) scaled.set(ref, eps * v);
            const double es = cell_energy(scaled, spec, pf, {0, 0}, eps).total;
            if (std::abs(es - eps * eps * e0) > 1e-12 * std::max(1.0, eps * eps * e0))
                ++bad_scaling;
        }
        ok &= expect(bad_translation == 0,
                     entry.name + ": " + std::to_string(bad_translation) + " translation", detail);
        ok &= expect(bad_period == 0,
                     entry.name + ": " + std::to_string(bad_period) + " periodicity", detail);
        ok &= expect(bad_frame == 0, entry.name + ": " + std::to_string(bad_frame) + " frame",
                     detail);
        ok &= expect(bad_scaling == 0,
                     entry.name + ": " + std::to_string(bad_scaling) + " scaling", detail);
    }
    return ok;
}

// ---- criterion 2: mechanism zero-energy -------------------------------------

double window_penalty(const LatticeSpec& spec, const PeriodicState& st) {
    const PenaltyFunction pf{spec.eta, 0};
    double total = 0;
    for (int i = 0; i < st.period[0]; ++i)
        for (int j = 0; j < st.period[1]; ++j) {
            Deformation def;
            def.epsilon = 1;
            def.window.offsets = {{i, j}};
            for (const auto& [b, d] : spec.node_stencil_m) {
                const NodeRef r{b, {d[0] + i, d[1] + j}};
                def.set(r, st.displacement(spec, r, 1.0));
            }
            total += penalty_energy(def, spec, pf, {i, j});
        }
    return total;
}

bool criterion_mechanisms(std::string& detail) {
    bool ok = true;
    const LatticeSpec kag = catalog("kagome");
    for (double theta : {M_PI / 12, M_PI / 6, M_PI / 4}) {
        const PeriodicState st = twisted_kagome_state(kag, theta);
        const MechanismReport rep = verify_mechanism(kag, st, 1e-12);
        ok &= expect(rep.max_spring_violation <= 1e-12,
                     "twisted spring residual " + fmt(rep.max_spring_violation), detail);
        ok &= expect(window_penalty(kag, st) == 0.0, "twisted penalty not exactly zero", detail);
        ok &= expect(rep.reversed_triangles == 0, "twisted triangle reversed", detail);
    }
    const LatticeSpec sq = catalog("square");
    const std::vector<std::pair<long, long>> fractions = {{0, 1}, {1, 2}};
    for (const auto& [p, q] : fractions) {
        const PeriodicState st = accordion_fold_state(sq, p, q);
        const MechanismReport rep = verify_mechanism(sq, st, 1e-12);
        ok &= expect(rep.max_spring_violation <= 1e-12,
                     "fold spring residual " + fmt(rep.max_spring_violation), detail);
        const double pen = window_penalty(sq, st);
        const double expected = double(rep.reversed_triangles) / sq.eta;
        ok &= expect(pen == expected, "fold penalty != reversed count / eta", detail);
        ok &= expect(pen > 0, "fold penalty not strictly positive", detail);
    }
    return ok;
}

// ---- criterion 3: density sanity ---------------------------------------------

bool criterion_density_sanity(std::string& detail) {
    bool ok = true;
    for (const auto& entry : catalog_entries()) {
        const LatticeSpec spec = catalog(entry.name);
        DensityQuery q;
        q.lambda = Mat2::Identity();
        q.k_schedule = {1, 2, 3, 4};
        q.bc_modes = {BcMode::ZeroBoundary, BcMode::Periodic};
        q.opt.multistart = 2;
        q.opt.max_iterations = 1500;
        const DensityTable table = effective_density(spec, q);
        for (const auto& row : table.rows)
            ok &= expect(row.value_exact <= 1e-10,
                         entry.name + " W(I) = " + fmt(row.value_exact) + " at k=" +
                             std::to_string(row.k) + " " + bc_name(row.bc),
                         detail);
    }
    const LatticeSpec kag = catalog("kagome");
    for (double theta : {0.0, M_PI / 16, M_PI / 8, 3 * M_PI / 16, M_PI / 4}) {
        DensityQuery q;
        q.lambda = std::cos(theta) * rotation(theta);
        q.opt.multistart = 2;
        q.opt.max_iterations = 1500;
        const DensityEstimate est = minimize_density(kag, q, 1, BcMode::Periodic);
        ok &= expect(est.value_exact <= 1e-8,
                     "kagome W(cos t R(t)) = " + fmt(est.value_exact) + " at theta " + fmt(theta),
                     detail);
    }
    return ok;
}

// ---- criterion 4: degeneracy with and without the penalty ---------------------

bool criterion_degeneracy(std::string& detail) {
    bool ok = true;
    const LatticeSpec sq = catalog("square");
    const LatticeSpec bare = spring_only(sq);
    const std::vector<std::pair<long, long>> fractions = {{0, 1}, {1, 2}};
    for (const auto& [p, q] : fractions) {
        const PeriodicState fold = accordion_fold_state(sq, p, q);
        const int k = fold.period[0];
        DensityQuery query;
        query.lambda = fold.F;
        query.k_schedule = {k};
        query.bc_modes = {BcMode::Periodic};
        query.opt.multistart = 2;
        query.opt.max_iterations = 1000;
        const DensityEstimate est = minimize_density(bare, query, k, BcMode::Periodic);
        ok &= expect(est.value_exact <= 1e-10,
                     "spring-only W(diag(c,1)) = " + fmt(est.value_exact) + " at c=" +
                         std::to_string(p) + "/" + std::to_string(q),
                     detail);

        // With the penalty the same fold evaluates to its reversed share, exactly.
        const double avg = state_average_density(sq, fold.F, fold);
        const MechanismReport rep = verify_mechanism(sq, fold, 1e-12);
        const double fraction =
            double(rep.reversed_triangles) / double(2 * fold.period[0] * fold.period[1]);
        const double exact = double(rep.reversed_triangles) / sq.eta /
                             (double(fold.period[0]) * double(fold.period[1]) * sq.cell_volume);
        ok &= expect(avg == exact, "penalized fold density not exact", detail);
        ok &= expect(avg >= 100.0 * fraction,
                     "penalized fold density " + fmt(avg) + " below 100 * fraction", detail);
    }
    return ok;
}

// ---- criterion 5: bounds audit -------------------------------------------------

bool criterion_bounds(std::string& detail) {
    bool ok = true;
    const int samples = 1000;
    for (const auto& entry : catalog_entries()) {
        const LatticeSpec spec = catalog(entry.name);
        for (const auto& [name, poly] : registered_polygons(spec)) {
            const BoundsAudit audit = audit_polygon_bounds(poly, samples, 100);
            ok &= expect(audit.violations_upper == 0 && audit.violations_lower == 0,
                         entry.name + "/" + name + " polygon bound violations", detail);
            const BoundsAudit chain =
                audit_triangle_chain_bound(poly[0], poly[1], poly[2], samples, 200);
            ok &= expect(chain.violations_upper == 0,
                         entry.name + "/" + name + " chain bound violations", detail);
        }
        const BoundsAudit cell = audit_cell_bounds(spec, samples, 300);
        ok &= expect(cell.violations_upper == 0,
                     entry.name + " cell upper violations: " +
                         std::to_string(cell.violations_upper),
                     detail);
        ok &= expect(cell.violations_lower == 0,
                     entry.name + " cell lower violations: " +
                         std::to_string(cell.violations_lower),
                     detail);
    }
    return ok;
}

// ---- criterion 6: gradient correctness -------------------------------------------

bool criterion_gradients(std::string& detail) {
    bool ok = true;
    for (const auto& entry : catalog_entries()) {
        const LatticeSpec spec = catalog(entry.name);
        const AssembledProblem prob = assemble_supercell(spec, 1, BcMode::Periodic, false);
        Rng rng(404);
        double worst = 0;
        for (int trial = 0; trial < 100; ++trial) {
            Mat2 l;
            l << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2),
                rng.uniform(-2, 2);
            Eigen::VectorXd x(prob.dof_count());
            for (long i = 0; i < x.size(); ++i)
                x[i] = rng.normal(0, trial % 2 ? 0.5 : 0.05);
            Eigen::VectorXd g;
            prob.eval(l, x, 0.05, &g);
            const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
            const double h = 1e-6;
            for (long i = 0; i < x.size(); ++i) {
                Eigen::VectorXd xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                const double fd =
                    (prob.eval(l, xp, 0.05, nullptr) - prob.eval(l, xm, 0.05, nullptr)) /
                    (2 * h);
                worst = std::max(worst, std::abs(fd - g[i]) / scale);
            }
        }
        ok &= expect(worst <= 1e-6, entry.name + " gradient error " + fmt(worst), detail);
    }
    return ok;
}

// ---- criterion 7: recovery sequences ------------------------------------------

bool criterion_recovery(std::string& detail) {
    bool ok = true;
    const std::vector<double> eps = {0.25, 0.125, 0.0625, 0.03125};
    const Domain box = Domain::box(Vec2(0, 0), Vec2(4, 4));

    const LatticeSpec sq = catalog("square");
    PeriodicState identity;
    const ConvergenceReport id_rep =
        recovery_sequence_energy(sq, Mat2::Identity(), identity, false, box, eps);
    for (double g : id_rep.gaps)
        ok &= expect(g <= 1e-12, "identity gap " + fmt(g), detail);

    const LatticeSpec kag = catalog("kagome");
    const PeriodicState twisted = twisted_kagome_state(kag, M_PI / 6);
    const ConvergenceReport tw_rep =
        recovery_sequence_energy(kag, twisted.F, twisted, false, box, eps);
    for (double g : tw_rep.gaps)
        ok &= expect(g <= 1e-12, "twisted gap " + fmt(g), detail);

    Mat2 twox;
    twox << 2, 0, 0, 2;
    PeriodicState zero;
    zero.F = twox;
    const ConvergenceReport rep = recovery_sequence_energy(sq, twox, zero, false, box, eps);
    ok &= expect(rep.fitted_rate >= 0.9, "fitted rate " + fmt(rep.fitted_rate), detail);
    detail += detail.empty() ? "" : "; ";
    detail += "rate " + fmt(rep.fitted_rate);
    return ok;
}

// ---- criterion 8: periodic vs Dirichlet consistency -----------------------------

bool criterion_periodic_dirichlet(std::string& detail) {
    bool ok = true;
    std::vector<Mat2> lambdas = {0.9 * Mat2::Identity(), 1.15 * Mat2::Identity(),
                                 std::cos(M_PI / 8) * rotation(M_PI / 8)};
    for (const std::string name : {"kagome", "square"}) {
        const LatticeSpec spec = catalog(name);
        for (const Mat2& l : lambdas) {
            DensityQuery q;
            q.lambda = l;
            q.k_schedule = {1, 2, 3};
            q.bc_modes = {BcMode::ZeroBoundary, BcMode::Periodic};
            q.opt.multistart = 2;
            q.opt.max_iterations = 800;
            const DensityTable table = effective_density(spec, q);
            for (int k : q.k_schedule) {
                double w_zero = -1, w_per = -1;
                for (const auto& row : table.rows) {
                    if (row.k != k) continue;
                    if (row.bc == BcMode::ZeroBoundary) w_zero = row.value_exact;
                    else w_per = row.value_exact;
                }
                ok &= expect(w_per <= w_zero + 1e-8,
                             name + " k=" + std::to_string(k) + ": W# " + fmt(w_per) +
                                 " > W0 " + fmt(w_zero),
                             detail);
            }
        }
    }
    return ok;
}

// ---- criterion 9: soft modes -----------------------------------------------------

bool criterion_soft_mode(std::string& detail) {
    bool ok = true;
    const LatticeSpec kag = catalog("kagome");
    const Domain box = Domain::box(Vec2(0, 0), Vec2(16, 16));
    const std::vector<double> eps = {0.5, 0.25, 0.125};

    OptimizerConfig opt;
    opt.multistart = 1;
    opt.max_iterations = 800;
    const SoftModeReport soft = soft_mode_experiment(kag, 0.9 * Mat2::Identity(), box, eps, opt);
    ok &= expect(soft.nonincreasing, "energies not nonincreasing", detail);
    ok &= expect(soft.energies.back() <= 0.1 * soft.baselines.back(),
                 "final " + fmt(soft.energies.back()) + " > 0.1 x baseline " +
                     fmt(soft.baselines.back()),
                 detail);

    OptimizerConfig neg_opt;
    neg_opt.multistart = 1;
    neg_opt.max_iterations = 400;
    const SoftModeReport neg =
        soft_mode_experiment(kag, 1.5 * Mat2::Identity(), box, eps, neg_opt);
    for (double e : neg.energies)
        ok &= expect(e >= neg.jensen_floor,
                     "negative control " + fmt(e) + " below floor " + fmt(neg.jensen_floor),
                     detail);
    detail += detail.empty() ? "" : "; ";
    detail += "ratio " + fmt(soft.energies.back() / soft.baselines.back()) + ", floor " +
              fmt(neg.jensen_floor);
    return ok;
}

// ---- criterion 10: interpolation estimates ----------------------------------------

bool criterion_interpolation(std::string& detail) {
    bool ok = true;
    struct Fn {
        std::string name;
        std::function<Vec2(const Vec2&)> f;
        double lip;
    };
    Mat2 l;
    l << 2, 0.5, -1, 1;
    const std::vector<Fn> fns = {
        {"affine", [l](const Vec2& x) { return Vec2(l * x + Vec2(0.1, -0.2)); }, l.norm()},
        {"crease", [](const Vec2& x) { return Vec2(std::abs(x.x() - 1.0), 0); }, 1.0},
        {"hat", [](const Vec2& x) { return Vec2(std::max(0.0, 1.0 - std::abs(x.x() - 1.5)), 0); },
         1.0},
    };
    const std::vector<double> eps = {0.25, 0.125, 0.0625};
    const Domain box = Domain::box(Vec2(0, 0), Vec2(3, 3));
    for (const std::string name : {"kagome", "square"}) {
        const LatticeSpec spec = catalog(name);
        for (const Fn& fn : fns) {
            const InterpolationReport rep =
                interpolation_estimate_report(fn.f, fn.lip, spec, eps, box);
            ok &= expect(std::abs(rep.gradient_ratio_slope) <= 0.1,
                         name + "/" + fn.name + " gradient slope " +
                             fmt(rep.gradient_ratio_slope),
                         detail);
            ok &= expect(std::abs(rep.error_ratio_slope) <= 0.1,
                         name + "/" + fn.name + " error slope " + fmt(rep.error_ratio_slope),
                         detail);
        }
    }
    return ok;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "exact invariance suite (1000 cases per lattice, <= 1e-12)", criterion_invariances},
        {2, "mechanism zero-energy (twisted Kagome, accordion folds)", criterion_mechanisms},
        {3, "density sanity (W(I) = 0; mechanism-seeded conformal grid)",
         criterion_density_sanity},
        {4, "degeneracy with/without the orientation penalty", criterion_degeneracy},
        {5, "bounds audit (polygon, chain, cell; 1000 samples each)", criterion_bounds},
        {6, "gradient correctness vs central differences", criterion_gradients},
        {7, "gamma-convergence recovery sequences", criterion_recovery},
        {8, "periodic vs Dirichlet consistency", criterion_periodic_dirichlet},
        {9, "soft-mode experiment with negative control", criterion_soft_mode},
        {10, "interpolation estimates stable across eps", criterion_interpolation},
    };
    const std::vector<double> budgets = {10, 0, 120, 0, 30, 0, 60, 0, 0, 0};

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        std::string detail;
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (budgets[i] > 0 && dt > budgets[i]) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + std::string("over time budget ") +
                      fmt(budgets[i]) + "s";
        }
        std::printf("[%s] criterion %d: %s%s%s (%.1fs)\n", ok ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), detail.empty() ? "" : " -- ", detail.c_str(), dt);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
