#pragma once

#include "latmet/linearize.hpp"

namespace latmet {

/// Orientation penalty f^eta. tau == 0 is the exact discontinuous form
/// (1/eta for t <= 0, 0 for t > 0); tau > 0 is the logistic smoothing
/// (1/eta) * sigma(-t/tau), which converges to the exact form pointwise.
struct PenaltyFunction {
    double eta = 0.01;
    double tau = 0;

    double value(double t) const;
    double derivative(double t) const;  // requires tau > 0
};

struct EnergyBreakdown {
    double spring = 0;
    double penalty = 0;
    double angle = 0;
    double total = 0;
    std::vector<std::pair<std::string, double>> per_term;
};

double spring_energy(const Deformation& def, const LatticeSpec& spec, const SpringTerm& term,
                     const std::array<int, 2>& cell_offset = {0, 0}, double epsilon = 1);

double angle_energy(const Deformation& def, const LatticeSpec& spec, const AngleTerm& term,
                    const std::array<int, 2>& cell_offset = {0, 0}, double epsilon = 1);

/// Gradient of the P1 interpolant on one triangle of one cell, straight from
/// nodal values (scaled geometry).
Mat2 cell_triangle_gradient(const Deformation& def, const LatticeSpec& spec,
                            const std::array<int, 2>& cell_offset, int tri_id, double epsilon);

/// Penalty part of one cell's energy: sum over the penalty set of
/// f^eta(det grad u|_T), area-weighted iff the spec says so, times eps^N.
double penalty_energy(const Deformation& def, const LatticeSpec& spec, const PenaltyFunction& pf,
                      const std::array<int, 2>& cell_offset, double epsilon = 1);
double penalty_energy(const PiecewiseLinearField& field, const LatticeSpec& spec,
                      const PenaltyFunction& pf, size_t cell_index);

EnergyBreakdown cell_energy(const Deformation& def, const LatticeSpec& spec,
                            const PenaltyFunction& pf, const std::array<int, 2>& cell_offset,
                            double epsilon = 1, bool with_per_term = false);

/// Sum of scaled cell energies over cells_in_domain(domain, epsilon).
/// Cells are evaluated in parallel; the reduction runs in fixed cell order,
/// so results do not depend on the thread count.
EnergyBreakdown domain_energy(const Deformation& def, const LatticeSpec& spec,
                              const PenaltyFunction& pf, const Domain& domain, double epsilon);
/// Straight-loop reference implementation kept for testing the parallel path.
EnergyBreakdown domain_energy_serial(const Deformation& def, const LatticeSpec& spec,
                                     const PenaltyFunction& pf, const Domain& domain,
                                     double epsilon);

std::vector<std::pair<std::array<int, 2>, EnergyBreakdown>>
domain_energy_cells(const Deformation& def, const LatticeSpec& spec, const PenaltyFunction& pf,
                    const Domain& domain, double epsilon);

/// Per-cell energy report: cell_offset, spring, penalty, angle, total.
std::string energy_report_csv(
    const std::vector<std::pair<std::array<int, 2>, EnergyBreakdown>>& rows);

using NodalGradient = std::unordered_map<NodeRef, Vec2, NodeRefHash>;

/// Analytic partial derivatives of the total smoothed energy of the window's
/// cells with respect to every nodal value stored in the deformation.
/// Requires tau > 0; ghost-vertex contributions are distributed to their
/// source nodes by the convex-rule weights.
NodalGradient energy_gradient(const Deformation& def, const LatticeSpec& spec,
                              const PenaltyFunction& pf, const CellSet& window, double epsilon);

}  // namespace latmet
