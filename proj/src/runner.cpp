#include "latmet/runner.hpp"

#include "latmet/analysis.hpp"
#include "latmet/csv.hpp"

#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

namespace latmet {

namespace {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Mat2 parse_mat(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || j[0].size() != 2 || j[1].size() != 2)
        throw ConfigError(where + ": expected a 2x2 matrix [[a,b],[c,d]]");
    Mat2 m;
    m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(),
        j[1][1].get<double>();
    return m;
}

Vec2 parse_vec2(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected a 2-vector");
    return Vec2(j[0].get<double>(), j[1].get<double>());
}

Domain parse_domain(const json& j, const std::string& where) {
    if (j.contains("box")) {
        const auto& b = j["box"];
        if (!b.is_array() || b.size() != 4)
            throw ConfigError(where + ".box: expected [x0,y0,x1,y1]");
        return Domain::box(Vec2(b[0].get<double>(), b[1].get<double>()),
                           Vec2(b[2].get<double>(), b[3].get<double>()));
    }
    if (j.contains("polygon")) {
        std::vector<Vec2> pts;
        for (const auto& p : j["polygon"]) pts.push_back(parse_vec2(p, where + ".polygon"));
        return Domain::polygon(pts);
    }
    throw ConfigError(where + ": expected a 'box' or 'polygon' domain");
}

OptimizerConfig parse_optimizer(const json& task, const std::vector<std::uint64_t>& seeds,
                                const std::string& where) {
    OptimizerConfig opt;
    opt.seeds = seeds;
    if (!task.contains("optimizer")) return opt;
    const json& j = task["optimizer"];
    opt.max_iterations = j.value("max_iterations", opt.max_iterations);
    opt.gradient_tolerance = j.value("gradient_tolerance", opt.gradient_tolerance);
    opt.multistart = j.value("multistart", opt.multistart);
    opt.sigma_scale = j.value("sigma_scale", opt.sigma_scale);
    opt.smoothing_tau = j.value("smoothing_tau", opt.smoothing_tau);
    opt.gauge_pin = j.value("gauge_pin", opt.gauge_pin);
    if (j.contains("seeds")) {
        opt.seeds.clear();
        for (const auto& s : j["seeds"]) opt.seeds.push_back(s.get<std::uint64_t>());
    }
    if (opt.max_iterations < 0 || opt.multistart < 0 || opt.sigma_scale < 0 ||
        opt.smoothing_tau <= 0)
        throw ConfigError(where + ".optimizer: invalid parameter");
    return opt;
}

std::vector<BcMode> parse_bc_modes(const json& task, const std::string& where) {
    std::vector<BcMode> modes = {BcMode::Periodic, BcMode::ZeroBoundary};
    if (!task.contains("bc")) return modes;
    modes.clear();
    for (const auto& b : task["bc"]) {
        const std::string s = b.get<std::string>();
        if (s == "periodic") modes.push_back(BcMode::Periodic);
        else if (s == "zero") modes.push_back(BcMode::ZeroBoundary);
        else throw ConfigError(where + ".bc: expected 'periodic' or 'zero'");
    }
    if (modes.empty()) throw ConfigError(where + ".bc: empty");
    return modes;
}

std::vector<double> parse_doubles(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty array");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
}

PeriodicState parse_state(const LatticeSpec& spec, const json& task, const std::string& where) {
    const std::string kind = task.value("psi", "zero");
    if (kind == "zero") {
        PeriodicState st;
        st.F = Mat2::Identity();
        return st;
    }
    if (kind == "twisted-kagome")
        return twisted_kagome_state(spec, task.value("theta", 0.0));
    if (kind == "accordion")
        return accordion_fold_state(spec, task.value("p", 0L), task.value("q", 1L));
    throw ConfigError(where + ".psi: expected 'zero', 'twisted-kagome' or 'accordion'");
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct TaskOutput {
    std::string csv;
    std::string summary;
};

// ---- individual tasks ------------------------------------------------------

TaskOutput run_density(const LatticeSpec& spec, const json& task,
                       const std::vector<std::uint64_t>& seeds, const std::string& where,
                       bool validate_only = false) {
    std::vector<Mat2> lambdas;
    if (task.contains("lambdas"))
        for (const auto& l : task["lambdas"]) lambdas.push_back(parse_mat(l, where + ".lambdas"));
    if (task.contains("grid")) {
        const auto cs = parse_doubles(task["grid"].at("c"), where + ".grid.c");
        const auto ths = parse_doubles(task["grid"].at("theta"), where + ".grid.theta");
        for (double c : cs)
            for (double th : ths) lambdas.push_back(c * rotation(th));
    }
    if (lambdas.empty()) throw ConfigError(where + ": no lambda matrices given");

    DensityQuery query;
    query.opt = parse_optimizer(task, seeds, where);
    query.bc_modes = parse_bc_modes(task, where);
    if (task.contains("k_schedule")) {
        query.k_schedule.clear();
        for (const auto& k : task["k_schedule"]) query.k_schedule.push_back(k.get<int>());
        if (query.k_schedule.empty() ||
            !std::is_sorted(query.k_schedule.begin(), query.k_schedule.end()) ||
            query.k_schedule.front() < 1)
            throw ConfigError(where + ".k_schedule: need an ascending list of positive k");
    }

    if (validate_only) return {};

    CsvWriter csv({"lambda11", "lambda12", "lambda21", "lambda22", "k", "bc", "value_exact",
                   "value_smoothed", "grad_norm", "iterations", "start_id"});
    std::string summary = "density estimates (upper estimates of the effective energy density)\n";
    for (const Mat2& l : lambdas) {
        DensityQuery q = query;
        q.lambda = l;
        const DensityTable table = effective_density(spec, q);
        for (const auto& row : table.rows) {
            csv.cell(l(0, 0)).cell(l(0, 1)).cell(l(1, 0)).cell(l(1, 1));
            csv.cell(row.k).cell(bc_name(row.bc)).cell(row.value_exact).cell(row.value_smoothed);
            csv.cell(row.grad_norm).cell(row.iterations).cell(row.best_start);
            csv.end_row();
        }
        const auto& best = table.best();
        summary += "lambda [[" + fmt(l(0, 0)) + "," + fmt(l(0, 1)) + "],[" + fmt(l(1, 0)) + "," +
                   fmt(l(1, 1)) + "]]: best W_hat = " + fmt(best.value_exact) + " at k=" +
                   std::to_string(best.k) + " bc=" + bc_name(best.bc) + "\n";
    }
    return {csv.str(), summary};
}

TaskOutput run_mechanism_verify(const LatticeSpec& spec, const json& task,
                                const std::string& where, bool validate_only = false) {
    const std::string kind = task.value("mechanism", "");
    PeriodicState state;
    std::string label;
    if (kind == "twisted-kagome") {
        const double theta = task.value("theta", 0.0);
        state = twisted_kagome_state(spec, theta);
        label = "twisted-kagome theta=" + fmt(theta);
    } else if (kind == "accordion") {
        const long p = task.value("p", 0L), q = task.value("q", 1L);
        state = accordion_fold_state(spec, p, q);
        label = "accordion c=" + std::to_string(p) + "/" + std::to_string(q);
    } else {
        throw ConfigError(where + ".mechanism: expected 'twisted-kagome' or 'accordion'");
    }
    const double tol = task.value("tolerance", 1e-12);
    if (validate_only) return {};
    const MechanismReport rep = verify_mechanism(spec, state, tol);
    CsvWriter csv({"mechanism", "spring_residual", "min_penalty_det", "reversed_triangles",
                   "is_mechanism"});
    csv.cell(label).cell(rep.max_spring_violation).cell(rep.min_penalty_det);
    csv.cell(rep.reversed_triangles).cell(std::string(rep.ok ? "true" : "false"));
    csv.end_row();
    std::string summary = label + ": spring residual " + fmt(rep.max_spring_violation) +
                          ", penalty " + std::to_string(rep.reversed_triangles) +
                          " triangles reversed\n";
    return {csv.str(), summary};
}

TaskOutput run_bounds_audit(const LatticeSpec& spec, const json& task,
                            const std::vector<std::uint64_t>& seeds, const std::string& where,
                            bool validate_only = false) {
    const int samples = task.value("samples", 1000);
    if (samples <= 0) throw ConfigError(where + ".samples: must be positive");
    const std::uint64_t seed = seeds.empty() ? 1 : seeds.front();
    const BoundConstants bc = cell_bound_constants(spec);  // validates the decomposition
    if (validate_only) return {};

    CsvWriter csv({"object", "samples", "violations_upper", "violations_lower", "c1",
                   "c2", "c3"});
    int total_viol = 0;
    for (const auto& [name, poly] : registered_polygons(spec)) {
        const PolygonConstants pc = polygon_bound_constants(poly);
        const BoundsAudit audit = audit_polygon_bounds(poly, samples, seed);
        csv.cell(name).cell(audit.samples).cell(audit.violations_upper);
        csv.cell(audit.violations_lower).cell(pc.c1).cell(pc.c2).cell(pc.c3);
        csv.end_row();
        total_viol += audit.violations_upper + audit.violations_lower;
        // Single-spring chain inequality on the polygon's first fan triangle.
        const BoundsAudit chain =
            audit_triangle_chain_bound(poly[0], poly[1], poly[2], samples, seed ^ 0x5bull);
        csv.cell(name + " chain").cell(chain.samples).cell(chain.violations_upper).cell(0);
        csv.cell(0.0).cell(0.0).cell(0.0);
        csv.end_row();
        total_viol += chain.violations_upper;
    }
    const BoundsAudit cell = audit_cell_bounds(spec, samples, seed);
    csv.cell(std::string("cell")).cell(cell.samples).cell(cell.violations_upper);
    csv.cell(cell.violations_lower).cell(bc.C1).cell(bc.C2).cell(bc.D2);
    csv.end_row();
    total_viol += cell.violations_upper + cell.violations_lower;

    std::string summary = "bounds audit on '" + spec.name + "': C1=" + fmt(bc.C1) +
                          " C2=" + fmt(bc.C2) + " D2=" + fmt(bc.D2) + " M=" + fmt(bc.M) + "\n" +
                          "total violations: " + std::to_string(total_viol) + "\n";
    return {csv.str(), summary};
}

TaskOutput run_rank_one(const LatticeSpec& spec, const json& task,
                        const std::vector<std::uint64_t>& seeds, const std::string& where,
                        bool validate_only = false) {
    const Mat2 a_mat = parse_mat(task.at("A"), where + ".A");
    const Vec2 a = parse_vec2(task.at("a"), where + ".a");
    const Vec2 n = parse_vec2(task.at("n"), where + ".n");
    const auto thetas = parse_doubles(task.at("thetas"), where + ".thetas");
    DensityQuery query;
    query.opt = parse_optimizer(task, seeds, where);
    query.bc_modes = parse_bc_modes(task, where);
    if (task.contains("k_schedule")) {
        query.k_schedule.clear();
        for (const auto& k : task["k_schedule"]) query.k_schedule.push_back(k.get<int>());
    }
    if (validate_only) return {};
    const RankOneReport rep = rank_one_convexity_check(spec, a_mat, a, n, thetas, query);
    CsvWriter csv({"theta", "w_mid", "w_a", "w_b", "violation"});
    for (size_t i = 0; i < rep.thetas.size(); ++i) {
        csv.cell(rep.thetas[i]).cell(rep.w_mid[i]).cell(rep.w_a).cell(rep.w_b);
        csv.cell(rep.violations[i]);
        csv.end_row();
    }
    std::string summary = "rank-one segment check: max violation " + fmt(rep.max_violation) +
                          " (optimizer-slack diagnostics; estimates are upper bounds)\n";
    return {csv.str(), summary};
}

TaskOutput run_recovery(const LatticeSpec& spec, const json& task, const std::string& where,
                        bool validate_only = false) {
    const Mat2 lambda = parse_mat(task.at("lambda"), where + ".lambda");
    const PeriodicState psi = parse_state(spec, task, where);
    const Domain domain = parse_domain(task.at("domain"), where + ".domain");
    const auto eps = parse_doubles(task.at("epsilons"), where + ".epsilons");
    const bool zero_bc = task.value("psi_zero_boundary", false);
    for (size_t i = 0; i + 1 < eps.size(); ++i)
        if (eps[i + 1] >= eps[i])
            throw ConfigError(where + ".epsilons: list must descend");
    if (validate_only) return {};
    const ConvergenceReport rep =
        recovery_sequence_energy(spec, lambda, psi, zero_bc, domain, eps);
    CsvWriter csv({"epsilon", "energy", "target", "gap", "log10_epsilon", "log10_gap"});
    for (size_t i = 0; i < rep.epsilons.size(); ++i) {
        csv.cell(rep.epsilons[i]).cell(rep.energies[i]).cell(rep.target).cell(rep.gaps[i]);
        csv.cell(std::log10(rep.epsilons[i]));
        csv.cell(rep.gaps[i] > 0 ? std::log10(rep.gaps[i]) : -std::numeric_limits<double>::infinity());
        csv.end_row();
    }
    std::string summary = "recovery sequence: target " + fmt(rep.target) + ", fitted gap rate " +
                          fmt(rep.fitted_rate) + "\n";
    return {csv.str(), summary};
}

TaskOutput run_soft_mode(const LatticeSpec& spec, const json& task,
                         const std::vector<std::uint64_t>& seeds, const std::string& where,
                         bool validate_only = false) {
    const Mat2 f = parse_mat(task.at("F"), where + ".F");
    const Domain domain = parse_domain(task.at("domain"), where + ".domain");
    const auto eps = parse_doubles(task.at("epsilons"), where + ".epsilons");
    const OptimizerConfig opt = parse_optimizer(task, seeds, where);
    if (validate_only) return {};
    const SoftModeReport rep = soft_mode_experiment(spec, f, domain, eps, opt);
    CsvWriter csv({"epsilon", "baseline", "min_energy", "dof_count", "log10_epsilon",
                   "log10_min_energy"});
    for (size_t i = 0; i < rep.epsilons.size(); ++i) {
        csv.cell(rep.epsilons[i]).cell(rep.baselines[i]).cell(rep.energies[i]);
        csv.cell(rep.dof_counts[i]);
        csv.cell(std::log10(rep.epsilons[i]));
        csv.cell(rep.energies[i] > 0 ? std::log10(rep.energies[i])
                                     : -std::numeric_limits<double>::infinity());
        csv.end_row();
    }
    std::string summary = std::string("soft-mode experiment: energies ") +
                          (rep.nonincreasing ? "nonincreasing" : "NOT nonincreasing") +
                          ", Jensen floor " + fmt(rep.jensen_floor) + "\n";
    return {csv.str(), summary};
}

TaskOutput run_interpolation(const LatticeSpec& spec, const json& task,
                             const std::string& where, bool validate_only = false) {
    const std::string fname = task.value("function", "crease");
    std::function<Vec2(const Vec2&)> f;
    double lip = 1.0;
    if (fname == "affine") {
        f = [](const Vec2& x) { return Vec2(2 * x.x() + 0.5 * x.y(), -x.x() + x.y()); };
        Mat2 l;
        l << 2, 0.5, -1, 1;
        lip = l.norm();
    } else if (fname == "crease") {
        f = [](const Vec2& x) { return Vec2(std::abs(x.x() - 1.0), 0.0); };
        lip = 1.0;
    } else if (fname == "hat") {
        f = [](const Vec2& x) {
            return Vec2(std::max(0.0, 1.0 - std::abs(x.x() - 1.5)), 0.0);
        };
        lip = 1.0;
    } else if (fname == "constant") {
        f = [](const Vec2&) { return Vec2(0.7, -0.3); };
        lip = 0.0;
    } else {
        throw ConfigError(where + ".function: expected affine|crease|hat|constant");
    }
    const auto eps = parse_doubles(task.at("epsilons"), where + ".epsilons");
    const Domain domain = task.contains("domain")
                              ? parse_domain(task["domain"], where + ".domain")
                              : Domain::box(Vec2(0, 0), Vec2(3, 3));
    if (validate_only) return {};
    const InterpolationReport rep =
        interpolation_estimate_report(f, lip, spec, eps, domain);
    CsvWriter csv({"epsilon", "gradient_ratio", "error_ratio"});
    for (size_t i = 0; i < rep.epsilons.size(); ++i) {
        csv.cell(rep.epsilons[i]).cell(rep.gradient_ratio[i]).cell(rep.error_ratio[i]);
        csv.end_row();
    }
    std::string summary = "interpolation constants for '" + fname + "': gradient-ratio slope " +
                          fmt(rep.gradient_ratio_slope) + ", error-ratio slope " +
                          fmt(rep.error_ratio_slope) + "\n";
    return {csv.str(), summary};
}

}  // namespace

std::string catalog_listing() {
    std::string out;
    for (const auto& e : catalog_entries()) {
        out += e.name + " (" + std::to_string(e.node_count) +
               (e.node_count == 1 ? " node, " : " nodes, ") + std::to_string(e.spring_count) +
               " springs/cell): " + e.description + "\n";
    }
    return out;
}

int run_config_text(const std::string& config_text, const RunOptions& options) {
    json cfg;
    try {
        cfg = json::parse(config_text);
    } catch (const std::exception& e) {
        std::cerr << "config: parse error: " << e.what() << "\n";
        return 1;
    }
    try {
#ifdef _OPENMP
        if (options.threads > 0) omp_set_num_threads(options.threads);
#endif
        // Load the lattice and validate every task before running anything.
        std::string lattice_name;
        if (cfg.contains("lattice") && cfg["lattice"].is_object())
            lattice_name = cfg["lattice"].at("file").get<std::string>();
        else
            lattice_name = cfg.value("lattice", "");
        if (lattice_name.empty()) throw ConfigError("lattice: missing");
        const LatticeSpec spec = load_lattice(lattice_name);

        std::vector<std::uint64_t> seeds;
        if (options.seed) {
            seeds = {*options.seed};
        } else if (cfg.contains("seeds")) {
            for (const auto& s : cfg["seeds"]) seeds.push_back(s.get<std::uint64_t>());
        }

        const json tasks = cfg.value("tasks", json::array());
        struct Planned {
            std::string type;
            json body;
        };
        std::vector<Planned> plan;
        for (size_t i = 0; i < tasks.size(); ++i) {
            const std::string where = "tasks[" + std::to_string(i) + "]";
            if (!tasks[i].is_object() || !tasks[i].contains("type"))
                throw ConfigError(where + ": missing type");
            const std::string type = tasks[i]["type"].get<std::string>();
            static const std::vector<std::string> known = {
                "density",  "mechanism-verify", "bounds-audit",
                "rank-one", "recovery",         "soft-mode",
                "interpolation-report"};
            if (std::find(known.begin(), known.end(), type) == known.end())
                throw ConfigError(where + ".type: unknown task type '" + type + "'");
            plan.push_back({type, tasks[i]});
        }

        auto dispatch = [&](size_t i, bool validate_only) {
            const std::string where = "tasks[" + std::to_string(i) + "]";
            if (plan[i].type == "density")
                return run_density(spec, plan[i].body, seeds, where, validate_only);
            if (plan[i].type == "mechanism-verify")
                return run_mechanism_verify(spec, plan[i].body, where, validate_only);
            if (plan[i].type == "bounds-audit")
                return run_bounds_audit(spec, plan[i].body, seeds, where, validate_only);
            if (plan[i].type == "rank-one")
                return run_rank_one(spec, plan[i].body, seeds, where, validate_only);
            if (plan[i].type == "recovery")
                return run_recovery(spec, plan[i].body, where, validate_only);
            if (plan[i].type == "soft-mode")
                return run_soft_mode(spec, plan[i].body, seeds, where, validate_only);
            return run_interpolation(spec, plan[i].body, where, validate_only);
        };
        // Validate every task's parameters before running any of them.
        for (size_t i = 0; i < plan.size(); ++i) dispatch(i, true);

        // Execute; collect outputs in memory and commit only on full success.
        std::vector<std::pair<std::string, std::string>> files;
        for (size_t i = 0; i < plan.size(); ++i) {
            const TaskOutput out = dispatch(i, false);
            const std::string stem = "task_" + std::to_string(i) + "_" + plan[i].type;
            files.push_back({stem + ".csv", out.csv});
            files.push_back({stem + ".txt", out.summary});
        }

        json manifest;
        manifest["version"] = "0.1.0";
        manifest["lattice"] = lattice_name;
        manifest["config_hash"] = fnv1a_hex(config_text);
        manifest["seeds"] = seeds;
        json flist = json::array();
        for (const auto& [name, body] : files) flist.push_back(name);
        manifest["files"] = flist;
        files.push_back({"manifest.json", manifest.dump(2) + "\n"});

        std::filesystem::create_directories(options.output_dir);
        for (const auto& [name, body] : files) {
            std::ofstream f(std::filesystem::path(options.output_dir) / name,
                            std::ios::binary | std::ios::trunc);
            if (!f) throw std::runtime_error("cannot write " + name);
            f << body;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int run_config_file(const std::string& config_path, const RunOptions& options) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "cannot open config '" << config_path << "'\n";
        return 1;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_text(ss.str(), options);
}

}  // namespace latmet
