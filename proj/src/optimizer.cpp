#include "sobmor/optimizer.hpp"

#include <cmath>
#include <limits>

namespace sobmor {

std::string to_string(Termination t) {
    switch (t) {
        case Termination::gradient: return "gradient";
        case Termination::f_decrease: return "f-decrease";
        case Termination::max_iters: return "max-iters";
        case Termination::line_search_failure: return "line-search-failure";
    }
    return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LineSearchResult {
    bool ok = false;
    double alpha = 0.0;
    double f = 0.0;
    Vector g;
};

// phi(a) = f(x + a d). Evaluations outside the domain (non-finite f or g)
// are treated as phi = +inf so the search backs off.
struct Phi {
    const ObjectiveFn& f;
    const GradientFn& g;
    const Vector& x;
    const Vector& d;
    Vector xtrial, gtrial;
    double ftrial = 0.0;

    // returns (phi, dphi); sets ftrial/gtrial as a side effect
    std::pair<double, double> operator()(double a) {
        xtrial = x + a * d;
        ftrial = f(xtrial);
        if (!std::isfinite(ftrial)) return {kInf, kInf};
        gtrial = g(xtrial);
        if (!gtrial.allFinite()) return {kInf, kInf};
        return {ftrial, gtrial.dot(d)};
    }
};

// Strong-Wolfe line search, bracketing plus zoom (Nocedal/Wright Alg. 3.5, 3.6).
LineSearchResult strong_wolfe(Phi& phi, double f0, double dphi0, double c1, double c2) {
    LineSearchResult res;
    const int max_expand = 30;
    const int max_zoom = 60;

    auto zoom = [&](double lo, double f_lo, double dphi_lo, double hi, double f_hi) {
        for (int it = 0; it < max_zoom; ++it) {
            // quadratic interpolation using phi(lo), phi'(lo), phi(hi); bisection fallback
            double a;
            const double denom = 2.0 * (f_hi - f_lo - dphi_lo * (hi - lo));
            if (std::isfinite(f_hi) && std::abs(denom) > 1e-300) {
                a = lo - dphi_lo * (hi - lo) * (hi - lo) / denom;
                const double lo_end = std::min(lo, hi), hi_end = std::max(lo, hi);
                const double margin = 0.1 * (hi_end - lo_end);
                if (!(a > lo_end + margin && a < hi_end - margin)) a = 0.5 * (lo + hi);
            } else {
                a = 0.5 * (lo + hi);
            }
            auto [fa, dfa] = phi(a);
            if (fa > f0 + c1 * a * dphi0 || fa >= f_lo) {
                hi = a;
                f_hi = fa;
            } else {
                if (std::abs(dfa) <= -c2 * dphi0) {
                    res.ok = true;
                    res.alpha = a;
                    res.f = fa;
                    res.g = phi.gtrial;
                    return;
                }
                if (dfa * (hi - lo) >= 0.0) {
                    hi = lo;
                    f_hi = f_lo;
                }
                lo = a;
                f_lo = fa;
                dphi_lo = dfa;
            }
            if (std::abs(hi - lo) < 1e-20 * std::max(1.0, std::abs(lo))) break;
        }
    };

    double a_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
    double a = 1.0;
    for (int it = 0; it < max_expand; ++it) {
        auto [fa, dfa] = phi(a);
        if (fa > f0 + c1 * a * dphi0 || (it > 0 && fa >= f_prev)) {
            zoom(a_prev, f_prev, dphi_prev, a, fa);
            return res;
        }
        if (std::abs(dfa) <= -c2 * dphi0) {
            res.ok = true;
            res.alpha = a;
            res.f = fa;
            res.g = phi.gtrial;
            return res;
        }
        if (dfa >= 0.0) {
            zoom(a, fa, dfa, a_prev, f_prev);
            return res;
        }
        a_prev = a;
        f_prev = fa;
        dphi_prev = dfa;
        a *= 2.0;
    }
    return res;
}

} // namespace

OptimResult minimize(const ObjectiveFn& f, const GradientFn& g, const Vector& theta0,
                     const OptimOptions& opts) {
    if (opts.max_iters < 1) throw DimensionError("max_iters must be >= 1");
    if (!(opts.wolfe_c1 > 0.0 && opts.wolfe_c1 < opts.wolfe_c2 && opts.wolfe_c2 < 1.0)) {
        throw DimensionError("need 0 < c1 < c2 < 1");
    }

    const Index n = theta0.size();
    Vector x = theta0;
    double fx = f(x);
    if (!std::isfinite(fx)) throw std::invalid_argument("objective not finite at theta0");
    Vector gx = g(x);
    if (!gx.allFinite()) throw std::invalid_argument("gradient not finite at theta0");

    OptimResult res;
    res.f_history.push_back(fx);

    Matrix H = Matrix::Identity(n, n);
    bool reset_used = false;

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        const double gnorm = gx.lpNorm<Eigen::Infinity>();
        if (opts.progress) opts.progress(iter, fx, gnorm);
        if (gnorm <= opts.grad_tol) {
            res.termination = Termination::gradient;
            res.theta_min = x;
            res.f_min = fx;
            res.iterations = iter;
            return res;
        }

        Vector d = -(H * gx);
        double dphi0 = gx.dot(d);
        if (!(dphi0 < 0.0)) {
            // not a descent direction; restart from steepest descent
            H.setIdentity();
            d = -gx;
            dphi0 = gx.dot(d);
        }

        Phi phi{f, g, x, d, Vector(), Vector(), 0.0};
        LineSearchResult ls = strong_wolfe(phi, fx, dphi0, opts.wolfe_c1, opts.wolfe_c2);
        if (!ls.ok && !reset_used) {
            reset_used = true;
            H.setIdentity();
            d = -gx;
            dphi0 = gx.dot(d);
            Phi phi2{f, g, x, d, Vector(), Vector(), 0.0};
            ls = strong_wolfe(phi2, fx, dphi0, opts.wolfe_c1, opts.wolfe_c2);
        }
        if (!ls.ok) {
            res.termination = Termination::line_search_failure;
            res.theta_min = x;
            res.f_min = fx;
            res.iterations = iter;
            return res;
        }

        const Vector x_new = x + ls.alpha * d;
        const Vector s = x_new - x;
        const Vector y = ls.g - gx;
        const double f_prev = fx;
        x = x_new;
        fx = ls.f;
        gx = ls.g;
        res.f_history.push_back(fx);

        const double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            const Vector Hy = H * y;
            const double yHy = y.dot(Hy);
            H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
            H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
        }

        if (opts.f_tol > 0.0 && (f_prev - fx) <= opts.f_tol * std::max(1.0, std::abs(f_prev))) {
            res.termination = Termination::f_decrease;
            res.theta_min = x;
            res.f_min = fx;
            res.iterations = iter + 1;
            return res;
        }
    }

    res.termination = Termination::max_iters;
    res.theta_min = x;
    res.f_min = fx;
    res.iterations = opts.max_iters;
    return res;
}

} // namespace sobmor
