#ifndef SOBMOR_OPTIMIZER_HPP
#define SOBMOR_OPTIMIZER_HPP

#include <functional>
#include <string>
#include <vector>

#include "sobmor/types.hpp"

namespace sobmor {

struct OptimOptions {
    int max_iters = 2000;
    double grad_tol = 1e-10; // sup-norm of the gradient
    double f_tol = 0.0;      // relative objective decrease; 0 disables
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    /// Optional per-iteration progress callback (iteration, f, ||g||_inf).
    std::function<void(int, double, double)> progress;
};

enum class Termination { gradient, f_decrease, max_iters, line_search_failure };

std::string to_string(Termination t);

struct OptimResult {
    Vector theta_min;
    double f_min = 0.0;
    int iterations = 0;
    Termination termination = Termination::gradient;
    std::vector<double> f_history; // nonincreasing, f_min is the last entry
};

using ObjectiveFn = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;

/// BFGS with a strong-Wolfe line search. The inverse-Hessian update is skipped
/// when the curvature condition s^T y > 1e-14 ||s|| ||y|| fails; a line-search
/// failure resets the inverse Hessian to the identity once before giving up.
OptimResult minimize(const ObjectiveFn& f, const GradientFn& g, const Vector& theta0,
                     const OptimOptions& opts = {});

} // namespace sobmor

#endif
