// Timing comparison of the OpenMP cell kernels against the serial reference.

#include "latmet/cellproblem.hpp"
#include "latmet/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>

using namespace latmet;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now();
        fn();
        best = std::min(best, now() - t0);
    }
    return best;
}

void bench_domain_energy(const std::string& name, double eps, double box_side) {
    const LatticeSpec spec = catalog(name);
    const PenaltyFunction pf{spec.eta, 0};
    const Domain box = Domain::box(Vec2(0, 0), Vec2(box_side, box_side));
    const CellSet cells = cells_in_domain(spec, box, eps);
    Rng rng(1);
    Mat2 l;
    l << 0.95, 0.05, -0.02, 1.05;
    const Deformation def = sample_at_nodes(
        [&](const Vec2& x) {
            return Vec2(l * x + Vec2(0.01 * std::sin(7 * x.x()), 0.01 * std::cos(5 * x.y())));
        },
        cells, spec, eps);

    volatile double sink = 0;
    const double t_par = time_best_of(3, [&] { sink = domain_energy(def, spec, pf, box, eps).total; });
    const double t_ser =
        time_best_of(3, [&] { sink = domain_energy_serial(def, spec, pf, box, eps).total; });
    const double v_par = domain_energy(def, spec, pf, box, eps).total;
    const double v_ser = domain_energy_serial(def, spec, pf, box, eps).total;
    std::printf("%-18s cells=%6zu  serial %8.3f ms  parallel %8.3f ms  speedup %.2fx  %s\n",
                name.c_str(), cells.offsets.size(), 1e3 * t_ser, 1e3 * t_par, t_ser / t_par,
                v_par == v_ser ? "bitwise-equal" : "MISMATCH");
    (void)sink;
}

void bench_objective(const std::string& name, int k) {
    const LatticeSpec spec = catalog(name);
    const AssembledProblem prob = assemble_supercell(spec, k, BcMode::Periodic);
    Rng rng(2);
    Mat2 l;
    l << 0.9, 0.1, 0.0, 1.0;
    Eigen::VectorXd x(prob.dof_count());
    for (long i = 0; i < x.size(); ++i) x[i] = rng.normal(0, 0.1);
    Eigen::VectorXd g;
    volatile double sink = 0;
    const double t = time_best_of(5, [&] { sink = prob.eval(l, x, 0.05, &g); });
    std::printf("%-18s k=%2d  dofs=%5d  objective+gradient %8.3f ms\n", name.c_str(), k,
                prob.dof_count(), 1e3 * t);
    (void)sink;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP with %d threads\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; parallel paths run serially\n");
#endif
    bench_domain_energy("square", 1.0 / 128.0, 1.0);
    bench_domain_energy("kagome", 1.0 / 64.0, 4.0);
    bench_domain_energy("square-long-range", 1.0 / 96.0, 1.0);
    bench_objective("kagome", 12);
    bench_objective("rotating-squares", 8);
    return 0;
}
