#pragma once

#include <Eigen/Dense>

#include <functional>

namespace wakesteer {

struct BoxMinimizeOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;
    double step_tolerance = 1e-11;
    // stop when the relative improvement stays below this for two
    // consecutive accepted steps; 0 disables
    double value_tolerance = 0.0;
    // central-difference step used when no analytic gradient is supplied
    double fd_step = 1e-5;
};

struct BoxMinimizeResult {
    Eigen::VectorXd x;
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Minimizes f over the box [lower, upper] with projected BFGS and a
// backtracking Armijo line search. `gradient` may be empty, in which case
// central finite differences are used.
BoxMinimizeResult minimize_box(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
    Eigen::VectorXd x0, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    const BoxMinimizeOptions& options = {});

} // namespace wakesteer
