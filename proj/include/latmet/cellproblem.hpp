#pragma once

#include "latmet/energy.hpp"
#include "latmet/optimizer.hpp"

#include <cstdint>
#include <functional>

namespace latmet {

enum class BcMode { ZeroBoundary, Periodic };

std::string bc_name(BcMode bc);

struct OptimizerConfig {
    int max_iterations = 5000;
    double gradient_tolerance = 1e-9;
    int multistart = 8;              // random starts on top of zero/mechanism/warm
    double sigma_scale = 0.1;        // perturbation = sigma_scale * nearest-node distance
    std::vector<std::uint64_t> seeds;  // defaults to 1..multistart
    double smoothing_tau = 0.05;
    bool gauge_pin = true;

    LbfgsOptions lbfgs_options() const;
    std::vector<std::uint64_t> effective_seeds() const;
};

struct DensityQuery {
    Mat2 lambda = Mat2::Identity();
    std::vector<int> k_schedule = {1, 2, 3, 4};
    std::vector<BcMode> bc_modes = {BcMode::Periodic, BcMode::ZeroBoundary};
    OptimizerConfig opt;
};

/// A deformation of the form u(x) = F x + psi(x) with psi periodic on a
/// period-cell block; the storage for mechanisms, correctors and minimizers.
struct PeriodicState {
    Mat2 F = Mat2::Identity();
    std::array<int, 2> period{1, 1};
    std::unordered_map<NodeRef, Vec2, NodeRefHash> psi;

    Vec2 psi_at(const NodeRef& ref) const;
    Vec2 displacement(const LatticeSpec& spec, const NodeRef& ref, double epsilon) const;
    /// u = (R F) x + R psi: the same state observed in a rotated frame.
    PeriodicState rotated(const Mat2& r) const;
};

/// Supercell (or Dirichlet-domain) minimization problem: free nodal variables
/// plus the constraint map resolving every node reference used by the energy.
class AssembledProblem {
  public:
    const LatticeSpec* spec = nullptr;
    int k = 1;
    BcMode bc = BcMode::Periodic;
    double epsilon = 1;
    bool gauge_pinned = false;
    NodeRef gauge_node;
    double normalization = 1;  // k^N |U| for supercells, 1 for domain problems

    std::vector<NodeRef> free_nodes;
    std::unordered_map<NodeRef, int, NodeRefHash> dof_of;  // node -> first dof index
    std::vector<std::array<int, 2>> cells;

    int dof_count() const { return int(free_nodes.size()) * 2; }

    /// Objective: (sum of cell energies of lambda*x + psi) / normalization,
    /// with the penalty smoothed at tau (tau = 0: exact form). Cells evaluate
    /// in parallel; accumulation runs in fixed cell order.
    double eval(const Mat2& lambda, const Eigen::VectorXd& x, double tau,
                Eigen::VectorXd* grad) const;
    double exact_value(const Mat2& lambda, const Eigen::VectorXd& x) const {
        return eval(lambda, x, 0.0, nullptr);
    }

    Eigen::VectorXd zero_start() const { return Eigen::VectorXd::Zero(dof_count()); }
    /// Fill the free variables from psi values (gauge-shifted if pinned).
    Eigen::VectorXd encode(const std::function<Vec2(const NodeRef&)>& psi) const;
    Eigen::VectorXd encode(const PeriodicState& state) const;
    /// Decode a dof vector into a k-periodic state (supercell problems only).
    PeriodicState decode(const Mat2& lambda, const Eigen::VectorXd& x) const;

    // Internal term tables; populated by the assemblers.
    struct Slot {
        int dof = -1;  // -1: psi pinned to zero (boundary layer or outside)
        Vec2 pos;      // scaled reference position (for the lambda*x part)
    };
    struct SpringEval {
        Slot a, b;
        double rest;   // scaled rest length
        double coeff;  // weight * stiffness
    };
    struct PenVertexEval {
        Vec2 pos;
        std::vector<std::pair<double, Slot>> contribs;
    };
    struct PenEval {
        std::array<PenVertexEval, 3> v;
        Mat2 pinv;     // [x1-x2, x1-x3]^-1 (scaled)
        double scale;  // eps^N (* |T| when area-weighted)
    };
    struct AngleEval {
        Slot apex, a1, a2;
        AngleForm form;
        double preferred_cosine, theta0, strength;
    };
    std::vector<SpringEval> springs;
    std::vector<PenEval> penalties;
    std::vector<AngleEval> angles;
    std::vector<size_t> cell_spring_begin, cell_pen_begin, cell_angle_begin;  // size cells+1
    std::vector<size_t> cell_contrib_begin;  // gradient scatter ranges
    double eta = 0.01;
};

/// Zero-boundary mode pins psi at nodes within d_m of the supercell boundary
/// (psi = 0 outside the supercell); periodic mode wraps offsets modulo k and
/// pins one node as the translation gauge.
AssembledProblem assemble_supercell(const LatticeSpec& spec, int k, BcMode bc,
                                    bool gauge_pin = true);

/// Dirichlet problem on a domain: u = F x + psi with psi pinned to zero at
/// nodes within eps*d_m of the boundary; energy summed over R_eps(domain).
AssembledProblem assemble_dirichlet(const LatticeSpec& spec, const Domain& domain,
                                    double epsilon);

struct DensityEstimate {
    double value_exact = 0;
    double value_smoothed = 0;
    int k = 1;
    BcMode bc = BcMode::Periodic;
    Mat2 lambda = Mat2::Identity();
    PeriodicState minimizer;
    double grad_norm = 0;
    int iterations = 0;
    int starts_tried = 0;
    int best_start = 0;
};

DensityEstimate minimize_density(const LatticeSpec& spec, const DensityQuery& query, int k,
                                 BcMode bc,
                                 const std::vector<PeriodicState>& extra_starts = {});

struct DensityTable {
    std::vector<DensityEstimate> rows;
    size_t best_index = 0;
    const DensityEstimate& best() const { return rows[best_index]; }
};

/// Full (k, bc) sweep: warm-starts each k from the best smaller-k minimizer
/// and feeds each zero-boundary minimizer to the periodic run at the same k.
DensityTable effective_density(const LatticeSpec& spec, const DensityQuery& query);

struct MechanismReport {
    bool ok = false;
    double max_spring_violation = 0;
    double min_penalty_det = 0;
    int reversed_triangles = 0;
};

/// True iff every spring keeps its rest length within tolerance and every
/// penalty-triangle determinant stays positive, over one period block.
MechanismReport verify_mechanism(const LatticeSpec& spec, const PeriodicState& state,
                                 double tolerance);

/// Alternate-rotation Kagome mechanism: macroscopic gradient cos(theta)*R(theta),
/// every material triangle moved rigidly. Valid for |theta| < pi/3.
PeriodicState twisted_kagome_state(const LatticeSpec& spec, double theta);

/// Accordion fold of the square lattice with average horizontal compression
/// c = p/q: spring energy exactly zero, reversed columns carry the penalty.
/// Picks the smallest period (q when p+q is even, else 2q).
PeriodicState accordion_fold_state(const LatticeSpec& spec, long p, long q);
/// Fold along the other axis (macroscopic gradient diag(1, c)).
PeriodicState accordion_fold_state_y(const LatticeSpec& spec, long p, long q);

/// Registered mechanism states usable as starts for the given macroscopic
/// gradient (twisted Kagome for conformal lambda, folds for axis compressions).
std::vector<PeriodicState> mechanism_starts(const LatticeSpec& spec, const Mat2& lambda);

/// Boundary of a union of cell parallelograms (partial overlaps handled);
/// used for distance-to-boundary pinning tests.
std::vector<std::pair<Vec2, Vec2>> region_boundary_segments(
    const LatticeSpec& spec, const std::vector<std::array<int, 2>>& cells);

double distance_to_segments(const Vec2& p, const std::vector<std::pair<Vec2, Vec2>>& segs);

}  // namespace latmet
