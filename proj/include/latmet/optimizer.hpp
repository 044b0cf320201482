#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace latmet {

struct LbfgsOptions {
    int max_iterations = 5000;
    double grad_tolerance = 1e-9;  // infinity norm
    int history = 10;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    int max_linesearch = 60;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = 0;
    double grad_inf_norm = 0;
    int iterations = 0;
    bool converged = false;
};

/// Limited-memory BFGS with Armijo backtracking. `fg(x, grad)` returns f and
/// fills grad. Deterministic for identical inputs.
template <class F>
LbfgsResult lbfgs_minimize(F&& fg, Eigen::VectorXd x0, const LbfgsOptions& opt) {
    using Vec = Eigen::VectorXd;
    const long n = x0.size();
    LbfgsResult res;
    res.x = std::move(x0);
    if (n == 0) {
        Vec g(0);
        res.f = fg(res.x, g);
        res.converged = true;
        return res;
    }

    Vec g(n), g_new(n), x_new(n);
    res.f = fg(res.x, g);
    std::vector<Vec> s_hist, y_hist;
    std::vector<double> rho_hist;

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        res.grad_inf_norm = g.lpNorm<Eigen::Infinity>();
        res.iterations = iter;
        if (res.grad_inf_norm <= opt.grad_tolerance) {
            res.converged = true;
            return res;
        }

        // Two-loop recursion.
        Vec q = g;
        const int h = int(s_hist.size());
        std::vector<double> alpha(static_cast<size_t>(h), 0.0);
        for (int i = h - 1; i >= 0; --i) {
            alpha[size_t(i)] = rho_hist[size_t(i)] * s_hist[size_t(i)].dot(q);
            q -= alpha[size_t(i)] * y_hist[size_t(i)];
        }
        if (h > 0) {
            const double yy = y_hist.back().squaredNorm();
            if (yy > 0) q *= s_hist.back().dot(y_hist.back()) / yy;
        }
        for (int i = 0; i < h; ++i) {
            const double beta = rho_hist[size_t(i)] * y_hist[size_t(i)].dot(q);
            q += (alpha[size_t(i)] - beta) * s_hist[size_t(i)];
        }
        Vec d = -q;
        double dg = d.dot(g);
        if (!(dg < 0)) {  // not a descent direction: reset to steepest descent
            d = -g;
            dg = -g.squaredNorm();
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        double step = (h == 0) ? std::min(1.0, 1.0 / std::max(1e-12, res.grad_inf_norm)) : 1.0;
        double f_new = res.f;
        bool accepted = false;
        for (int ls = 0; ls < opt.max_linesearch; ++ls) {
            x_new = res.x + step * d;
            f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= res.f + opt.armijo_c * step * dg) {
                accepted = true;
                break;
            }
            step *= opt.backtrack;
            if (step < 1e-20) break;
        }
        if (!accepted) {
            res.converged = false;
            return res;  // line search exhausted; current point is the answer
        }

        Vec s = x_new - res.x;
        Vec y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (int(s_hist.size()) > opt.history) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        res.x.swap(x_new);
        res.f = f_new;
        g.swap(g_new);
    }
    res.grad_inf_norm = g.lpNorm<Eigen::Infinity>();
    res.iterations = opt.max_iterations;
    return res;
}

}  // namespace latmet
