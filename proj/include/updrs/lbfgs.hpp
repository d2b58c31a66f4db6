#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "updrs/error.hpp"
#include "updrs/linalg.hpp"

namespace updrs {

/// Objective callback: fills grad (same size as x) and returns f(x).
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct LbfgsConfig {
    std::size_t memory = 10;            // number of stored (s, y) pairs
    double grad_tol = 1e-6;             // terminate when ||grad||_inf <= grad_tol
    std::size_t max_iterations = 1000;
    double c1 = 1e-4;                   // sufficient-decrease constant
    double c2 = 0.9;                    // curvature constant
    double first_step = 1.0;            // trial step of the very first line search
    std::size_t max_line_search = 60;   // objective evaluations per line search
};

enum class LbfgsStatus { gradient_tolerance, max_iterations, line_search_failed };

inline std::string to_string(LbfgsStatus s) {
    switch (s) {
        case LbfgsStatus::gradient_tolerance: return "gradient_tolerance";
        case LbfgsStatus::max_iterations: return "max_iterations";
        default: return "line_search_failed";
    }
}

struct OptimIterate {
    double objective = 0.0;
    double grad_norm = 0.0;  // infinity norm
    double step = 0.0;
};

struct OptimTrace {
    std::vector<OptimIterate> iterates;  // one entry per accepted iteration
    LbfgsStatus status = LbfgsStatus::max_iterations;
    std::size_t evaluations = 0;
};

struct LbfgsResult {
    std::vector<double> x;
    double objective = 0.0;
    OptimTrace trace;
};

namespace detail {

struct LinePoint {
    double alpha, f, dphi;
};

/// Cubic interpolation minimiser for a bracket [a, b] with values and slopes,
/// falling back to bisection when the cubic is degenerate or leaves the
/// bracket interior (Nocedal & Wright eq. 3.59).
inline double cubic_step(const LinePoint& a, const LinePoint& b) {
    const double d1 = a.dphi + b.dphi - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.dphi * b.dphi;
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
        double t = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
        const double lo = std::min(a.alpha, b.alpha), hi = std::max(a.alpha, b.alpha);
        const double margin = 0.1 * (hi - lo);
        if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
    }
    return 0.5 * (a.alpha + b.alpha);
}

}  // namespace detail

/// Limited-memory BFGS with the two-loop recursion and a strong-Wolfe line
/// search. Curvature pairs with s'y <= 1e-10 are skipped; line-search failure
/// terminates with the best point found so far. Accepted objective values are
/// strictly decreasing by the sufficient-decrease condition.
inline LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                                  const LbfgsConfig& cfg = {}) {
    const std::size_t n = x0.size();
    LbfgsResult result;
    result.x = std::move(x0);

    std::vector<double> grad(n);
    double f = objective(result.x, grad);
    result.trace.evaluations = 1;
    if (!std::isfinite(f)) throw NonFiniteObjective("lbfgs: objective not finite at x0");

    std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y)

    auto two_loop = [&](const std::vector<double>& g) {
        std::vector<double> q = g;
        std::vector<double> alpha(pairs.size());
        for (std::size_t idx = pairs.size(); idx-- > 0;) {
            const auto& [s, y] = pairs[idx];
            const double rho = 1.0 / dot(s, y);
            alpha[idx] = rho * dot(s, q);
            for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[idx] * y[i];
        }
        if (!pairs.empty()) {
            const auto& [s, y] = pairs.back();
            const double gamma = dot(s, y) / dot(y, y);
            for (auto& v : q) v *= gamma;
        }
        for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
            const auto& [s, y] = pairs[idx];
            const double rho = 1.0 / dot(s, y);
            const double beta = rho * dot(y, q);
            for (std::size_t i = 0; i < n; ++i) q[i] += s[i] * (alpha[idx] - beta);
        }
        return q;
    };

    std::vector<double> x_new(n), g_new(n), direction(n);

    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
        if (norm_inf(grad) <= cfg.grad_tol) {
            result.trace.status = LbfgsStatus::gradient_tolerance;
            result.objective = f;
            return result;
        }

        direction = two_loop(grad);
        for (auto& v : direction) v = -v;
        double dphi0 = dot(grad, direction);
        if (!(dphi0 < 0.0)) {
            // fall back to steepest descent if the model direction is unusable
            pairs.clear();
            for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
            dphi0 = dot(grad, direction);
        }

        // ---- strong Wolfe line search (bracket + zoom) ----
        auto eval_at = [&](double alpha, double& f_out, double& dphi_out) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = result.x[i] + alpha * direction[i];
            f_out = objective(x_new, g_new);
            ++result.trace.evaluations;
            dphi_out = dot(g_new, direction);
        };

        const double f0 = f;
        double accepted_alpha = -1.0;
        double f_acc = f, dphi_acc = 0.0;
        std::size_t evals = 0;

        detail::LinePoint prev{0.0, f0, dphi0};
        double alpha = iter == 0 ? cfg.first_step : 1.0;
        bool bracketed = false;
        detail::LinePoint lo{}, hi{};

        while (evals < cfg.max_line_search) {
            double ft, dphit;
            eval_at(alpha, ft, dphit);
            ++evals;
            if (!std::isfinite(ft)) {
                lo = prev;
                hi = {alpha, std::numeric_limits<double>::infinity(), 0.0};
                bracketed = true;
                break;
            }
            if (ft > f0 + cfg.c1 * alpha * dphi0 || (evals > 1 && ft >= prev.f)) {
                lo = prev;
                hi = {alpha, ft, dphit};
                bracketed = true;
                break;
            }
            if (std::abs(dphit) <= -cfg.c2 * dphi0) {
                accepted_alpha = alpha;
                f_acc = ft;
                dphi_acc = dphit;
                break;
            }
            if (dphit >= 0.0) {
                lo = {alpha, ft, dphit};
                hi = prev;
                bracketed = true;
                break;
            }
            prev = {alpha, ft, dphit};
            alpha = std::min(2.0 * alpha, 1e12);
        }

        if (bracketed && accepted_alpha < 0.0) {
            while (evals < cfg.max_line_search) {
                const double trial = detail::cubic_step(lo, hi);
                double ft, dphit;
                eval_at(trial, ft, dphit);
                ++evals;
                if (!std::isfinite(ft) || ft > f0 + cfg.c1 * trial * dphi0 || ft >= lo.f) {
                    hi = {trial, ft, dphit};
                } else {
                    if (std::abs(dphit) <= -cfg.c2 * dphi0) {
                        accepted_alpha = trial;
                        f_acc = ft;
                        dphi_acc = dphit;
                        break;
                    }
                    if (dphit * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                    lo = {trial, ft, dphit};
                }
                if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha)))
                    break;
            }
            // zoom exhausted: fall back to the best sufficient-decrease point
            // (curvature can be unsatisfiable near ReLU kinks)
            if (accepted_alpha < 0.0 && lo.alpha > 0.0 && lo.f < f0) {
                double ft, dphit;
                eval_at(lo.alpha, ft, dphit);
                accepted_alpha = lo.alpha;
                f_acc = ft;
                dphi_acc = dphit;
            }
        }

        if (accepted_alpha < 0.0) {
            result.trace.status = LbfgsStatus::line_search_failed;
            result.objective = f;
            return result;
        }
        (void)dphi_acc;

        // x_new / g_new hold the last evaluated point, which is the accepted one
        for (std::size_t i = 0; i < n; ++i) x_new[i] = result.x[i] + accepted_alpha * direction[i];

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - result.x[i];
            y[i] = g_new[i] - grad[i];
        }
        if (dot(s, y) > 1e-10) {
            pairs.emplace_back(std::move(s), std::move(y));
            if (pairs.size() > cfg.memory) pairs.pop_front();
        }

        result.x = x_new;
        f = f_acc;
        grad = g_new;
        result.trace.iterates.push_back({f, norm_inf(grad), accepted_alpha});
    }

    result.trace.status = norm_inf(grad) <= cfg.grad_tol ? LbfgsStatus::gradient_tolerance
                                                         : LbfgsStatus::max_iterations;
    result.objective = f;
    return result;
}

}  // namespace updrs
