#pragma once

#include "latmet/cellproblem.hpp"

namespace latmet {

/// Chain-spring energy of a polygon: springs along A1A2, ..., A_{n-1}A_n
/// (all sides except the closing one).
double polygon_energy(const std::vector<Vec2>& ref, const std::vector<Vec2>& def);

struct TriangleConstants {
    double alpha = 0, beta = 0;  // norm-equivalence constants of [A-B, B-C]
    double c1 = 0, c2 = 0, c3 = 0;
};

/// Constants for the two-spring chain A-B, B-C on a nondegenerate triangle:
///   E_poly <= c1 (|grad u|^2_{L2(T)} + |T|),
///   E_poly >= c2 |grad u|^2_{L2(T)} - c3 |T|.
TriangleConstants triangle_bound_constants(const Vec2& a, const Vec2& b, const Vec2& c);

struct PolygonConstants {
    double c1 = 0, c2 = 0, c3 = 0;
};

/// Inductive constants for a convex polygon fan-triangulated from its first
/// vertex; base case delegates to triangle_bound_constants.
PolygonConstants polygon_bound_constants(const std::vector<Vec2>& poly);

/// |grad u|^2_{L2(P)} of the fan interpolant given nodal values at the
/// polygon vertices.
double polygon_fan_gradient_sq(const std::vector<Vec2>& ref, const std::vector<Vec2>& def);

struct BoundConstants {
    double C1 = 0;  // cell upper bound against |grad u|^2_{L2(U_n)} + |U_n|
    double C2 = 0;  // cell lower bound
    double D2 = 0;
    double M = 0;   // penalty ceiling
    struct Entry {
        std::string name;
        double weight;
        double area;
        TriangleConstants tri;  // alpha/beta filled for triangles only
        PolygonConstants poly;
    };
    std::vector<Entry> upper, lower;
};

/// Assembles C1, C2, D2 from the registered polygon decompositions of the
/// catalog lattices (upper / lower splits plus long-spring chain bounds).
BoundConstants cell_bound_constants(const LatticeSpec& spec);

/// Distinct polygons of the registered decomposition (name -> vertex chain).
std::vector<std::pair<std::string, std::vector<Vec2>>> registered_polygons(
    const LatticeSpec& spec);

struct BoundsAudit {
    int samples = 0;
    int violations_upper = 0;
    int violations_lower = 0;
};

BoundsAudit audit_polygon_bounds(const std::vector<Vec2>& poly, int samples,
                                 std::uint64_t seed);
/// Single-spring bound E_AC <= 3 [gamma + E_AB + E_BC], gamma = 6 max(|AB|,|BC|)^2.
BoundsAudit audit_triangle_chain_bound(const Vec2& a, const Vec2& b, const Vec2& c, int samples,
                                       std::uint64_t seed);
BoundsAudit audit_cell_bounds(const LatticeSpec& spec, int samples, std::uint64_t seed);

struct RankOneReport {
    Mat2 a_mat, b_mat;
    double w_a = 0, w_b = 0;
    std::vector<double> thetas;
    std::vector<double> w_mid;
    std::vector<double> violations;
    double max_violation = 0;
};

/// Estimates W at A, B = A + a (x) n, and the segment points; reports the
/// worst convexity violation (cross-seeded starts, shared budget).
RankOneReport rank_one_convexity_check(const LatticeSpec& spec, const Mat2& a_mat, const Vec2& a,
                                       const Vec2& n, const std::vector<double>& thetas,
                                       const DensityQuery& query);

struct ConvergenceReport {
    std::vector<double> epsilons;
    std::vector<double> energies;
    std::vector<double> gaps;
    double target = 0;
    double fitted_rate = 0;
};

/// Scaled-domain energies of the corrector ansatz u = lambda x + eps psi(x/eps).
/// A periodic psi is applied on every cell; a zero-boundary psi is applied on
/// period-tiles compactly inside the shrunken domain and u = lambda x elsewhere.
ConvergenceReport recovery_sequence_energy(const LatticeSpec& spec, const Mat2& lambda,
                                           const PeriodicState& psi, bool psi_is_zero_boundary,
                                           const Domain& domain,
                                           const std::vector<double>& epsilons);

struct SoftModeReport {
    Mat2 f_matrix;
    std::vector<double> epsilons;
    std::vector<double> baselines;  // energy of u = F x
    std::vector<double> energies;   // minimized Dirichlet energies
    std::vector<int> dof_counts;
    double jensen_floor = 0;        // C2 (|F|^2 - D2) |Omega|
    bool nonincreasing = false;
};

SoftModeReport soft_mode_experiment(const LatticeSpec& spec, const Mat2& f_matrix,
                                    const Domain& domain, const std::vector<double>& epsilons,
                                    const OptimizerConfig& opt);

struct LipschitzCheck {
    Mat2 lambda, mu;
    double w_lambda = 0, w_mu = 0;
    double bound = 0;
    bool violated = false;
};

/// Estimate-level Lipschitz diagnostics: |W(lambda) - W(mu)| against
/// c3 (1 + |lambda| + |mu|) |lambda - mu| + 2 slack. Reported, never fatal.
std::vector<LipschitzCheck> lipschitz_report(const LatticeSpec& spec, int pairs,
                                             std::uint64_t seed, const DensityQuery& query,
                                             double c3, double slack = 1e-3);

/// Scale constant used for the Lipschitz diagnostic when none is supplied:
/// the quadratic-growth coefficient C1 (2n-1)^N of the cell upper bound.
double default_lipschitz_c3(const LatticeSpec& spec);

/// Cell-average energy of lambda x + psi over one period block (exact penalty).
double state_average_density(const LatticeSpec& spec, const Mat2& lambda,
                             const PeriodicState& psi);

}  // namespace latmet
