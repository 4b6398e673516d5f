#include "wakesteer/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wakesteer {

namespace {

Eigen::VectorXd project(Eigen::VectorXd x, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x(i) = std::clamp(x(i), lo(i), hi(i));
    return x;
}

// gradient components pointing out of the box at an active bound are zeroed
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) <= lo(i) && g(i) > 0.0) pg(i) = 0.0;
        if (x(i) >= hi(i) && g(i) < 0.0) pg(i) = 0.0;
    }
    return pg;
}

} // namespace

BoxMinimizeResult minimize_box(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    Eigen::VectorXd x0, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    const BoxMinimizeOptions& options) {
    const Eigen::Index n = x0.size();

    auto grad_at = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        if (gradient) return gradient(x);
        Eigen::VectorXd g(n), xp = x;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double h = options.fd_step * std::max(1.0, std::abs(x(i)));
            xp(i) = x(i) + h;
            const double fp = f(xp);
            xp(i) = x(i) - h;
            const double fm = f(xp);
            xp(i) = x(i);
            g(i) = (fp - fm) / (2.0 * h);
        }
        return g;
    };

    BoxMinimizeResult res;
    res.x = project(std::move(x0), lower, upper);
    res.value = f(res.x);
    if (!std::isfinite(res.value)) return res;

    Eigen::VectorXd g = grad_at(res.x);
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    int stagnant = 0;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        res.iterations = iter;
        const Eigen::VectorXd pg = projected_gradient(res.x, g, lower, upper);
        if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
            res.converged = true;
            return res;
        }

        Eigen::VectorXd dir = -(h_inv * g);
        if (dir.dot(g) >= 0.0) { // not a descent direction, reset
            h_inv.setIdentity();
            dir = -pg;
        }

        // backtracking line search on the projected path
        double step = 1.0;
        double fx_new = std::numeric_limits<double>::infinity();
        Eigen::VectorXd x_new;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = project(res.x + step * dir, lower, upper);
            fx_new = f(x_new);
            const double decrease = 1e-4 * g.dot(x_new - res.x);
            if (std::isfinite(fx_new) && fx_new <= res.value + decrease) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.converged = pg.lpNorm<Eigen::Infinity>() < 1e-4;
            return res;
        }

        const Eigen::VectorXd s = x_new - res.x;
        if (s.lpNorm<Eigen::Infinity>() < options.step_tolerance) {
            res.x = x_new;
            res.value = fx_new;
            res.converged = true;
            return res;
        }

        if (options.value_tolerance > 0.0) {
            const double rel = (res.value - fx_new) /
                               std::max(1.0, std::abs(res.value));
            if (rel < options.value_tolerance) {
                if (++stagnant >= 2) {
                    res.x = x_new;
                    res.value = fx_new;
                    res.converged = true;
                    return res;
                }
            } else {
                stagnant = 0;
            }
        }

        const Eigen::VectorXd g_new = grad_at(x_new);
        const Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12) {
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
            const Eigen::MatrixXd v = id - (s * yv.transpose()) / sy;
            h_inv = v * h_inv * v.transpose() + (s * s.transpose()) / sy;
        } else {
            h_inv.setIdentity();
        }

        res.x = x_new;
        res.value = fx_new;
        g = g_new;
    }
    return res;
}

} // namespace wakesteer
