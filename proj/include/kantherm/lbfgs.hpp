// Limited-memory BFGS with a strong-Wolfe line search.
//
// The search direction comes from the standard two-loop recursion over the
// stored (s, y) pairs; step lengths satisfy the strong Wolfe conditions
// (c1 = 1e-4, c2 = 0.9) via bracketing and zoom. Curvature pairs with
// s^T y <= 1e-10 are discarded. If the line search fails within its
// evaluation budget the step falls back to steepest descent with Armijo
// backtracking and is flagged.
#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "kantherm/errors.hpp"

namespace kantherm {

/// Objective callback: fills grad and returns the loss at x.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

struct LbfgsOptions {
    int memory = 10;           // stored curvature pairs
    double c1 = 1e-4;          // Armijo coefficient
    double c2 = 0.9;           // curvature coefficient
    int max_line_search = 20;  // objective evaluations per line search
    double grad_tol = 1e-12;   // ||g||_inf at which the iterate is converged
    double min_curvature = 1e-10;
};

struct LbfgsHistory {
    std::deque<std::vector<double>> s;
    std::deque<std::vector<double>> y;
    std::deque<double> rho;
    std::vector<double> grad; // gradient at the current iterate
    double fx = 0.0;
    bool primed = false; // grad/fx valid for the current x
    long iteration = 0;

    void clear() {
        s.clear();
        y.clear();
        rho.clear();
        grad.clear();
        primed = false;
        iteration = 0;
    }
};

enum class LbfgsStatus {
    Accepted,         // strong-Wolfe step taken
    FallbackAccepted, // Armijo steepest-descent step taken after search failure
    Converged,        // gradient at tolerance; no movement
    Failed            // no acceptable step found at all
};

struct LbfgsStepResult {
    LbfgsStatus status = LbfgsStatus::Failed;
    double loss = 0.0;        // loss at the new iterate (or current if no move)
    double step_length = 0.0; // accepted alpha
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

/// Two-loop recursion: d = -H g with H from the stored pairs.
inline std::vector<double> lbfgs_direction(const std::vector<double>& g, const LbfgsHistory& h) {
    std::vector<double> q = g;
    const std::size_t m = h.s.size();
    std::vector<double> alpha(m);
    for (std::size_t idx = m; idx-- > 0;) {
        alpha[idx] = h.rho[idx] * dot(h.s[idx], q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[idx] * h.y[idx][i];
    }
    if (m > 0) {
        const double gamma = dot(h.s[m - 1], h.y[m - 1]) / dot(h.y[m - 1], h.y[m - 1]);
        for (double& v : q) v *= gamma;
    }
    for (std::size_t idx = 0; idx < m; ++idx) {
        const double beta = h.rho[idx] * dot(h.y[idx], q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += h.s[idx][i] * (alpha[idx] - beta);
    }
    for (double& v : q) v = -v;
    return q;
}

struct LinePoint {
    double alpha = 0.0;
    double phi = 0.0;  // f(x + alpha d)
    double dphi = 0.0; // g(x + alpha d)^T d
};

} // namespace detail

/// One quasi-Newton step from x. The objective and gradient at the updated x
/// stay cached in the history, so each call costs only the line-search
/// evaluations.
inline LbfgsStepResult lbfgs_step(const Objective& f, std::vector<double>& x, LbfgsHistory& h,
                                  const LbfgsOptions& opt = {}) {
    if (!h.primed) {
        h.grad.assign(x.size(), 0.0);
        h.fx = f(x, h.grad);
        if (!std::isfinite(h.fx)) throw numeric_error("lbfgs: non-finite initial loss");
        h.primed = true;
    }

    LbfgsStepResult result;
    result.loss = h.fx;
    if (detail::inf_norm(h.grad) <= opt.grad_tol) {
        result.status = LbfgsStatus::Converged;
        return result;
    }

    std::vector<double> d = detail::lbfgs_direction(h.grad, h);
    double dg0 = detail::dot(d, h.grad);
    if (dg0 >= 0.0) {
        // Not a descent direction; drop the history and fall back to -g.
        h.s.clear();
        h.y.clear();
        h.rho.clear();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = -h.grad[i];
        dg0 = detail::dot(d, h.grad);
    }

    const double f0 = h.fx;
    std::vector<double> x_trial(x.size());
    std::vector<double> g_trial(x.size());
    int evals = 0;
    auto eval = [&](double alpha) {
        for (std::size_t i = 0; i < x.size(); ++i) x_trial[i] = x[i] + alpha * d[i];
        const double phi = f(x_trial, g_trial);
        ++evals;
        return detail::LinePoint{alpha, phi, detail::dot(g_trial, d)};
    };

    auto wolfe_ok = [&](const detail::LinePoint& p) {
        return p.phi <= f0 + opt.c1 * p.alpha * dg0 && std::fabs(p.dphi) <= -opt.c2 * dg0;
    };

    bool found = false;
    detail::LinePoint accepted;

    // Bracketing phase.
    double gnorm = std::sqrt(detail::dot(h.grad, h.grad));
    detail::LinePoint prev{0.0, f0, dg0};
    double alpha = (h.iteration == 0 && h.s.empty()) ? std::min(1.0, 1.0 / gnorm) : 1.0;
    detail::LinePoint bracket_lo, bracket_hi;
    bool have_bracket = false;
    while (evals < opt.max_line_search) {
        detail::LinePoint p = eval(alpha);
        if (!std::isfinite(p.phi)) {
            // Shrink toward the last good point.
            alpha = 0.5 * (prev.alpha + alpha);
            if (alpha <= 1e-20) break;
            continue;
        }
        if (p.phi > f0 + opt.c1 * p.alpha * dg0 || (prev.alpha > 0.0 && p.phi >= prev.phi)) {
            bracket_lo = prev;
            bracket_hi = p;
            have_bracket = true;
            break;
        }
        if (wolfe_ok(p)) {
            accepted = p;
            found = true;
            break;
        }
        if (p.dphi >= 0.0) {
            bracket_lo = p;
            bracket_hi = prev;
            have_bracket = true;
            break;
        }
        prev = p;
        alpha *= 2.0;
        if (alpha > 1e10) break;
    }

    // Zoom phase: keep the Wolfe invariants on [lo, hi].
    if (!found && have_bracket) {
        while (evals < opt.max_line_search) {
            const double lo = bracket_lo.alpha;
            const double hi = bracket_hi.alpha;
            const double width = hi - lo;
            // Quadratic interpolation from (phi_lo, dphi_lo, phi_hi), safeguarded
            // into the middle 60% of the interval.
            double trial = lo - 0.5 * bracket_lo.dphi * width * width /
                                    (bracket_hi.phi - bracket_lo.phi - bracket_lo.dphi * width);
            const double lo_guard = lo + 0.2 * width;
            const double hi_guard = hi - 0.2 * width;
            if (!std::isfinite(trial) || trial < std::min(lo_guard, hi_guard) ||
                trial > std::max(lo_guard, hi_guard))
                trial = 0.5 * (lo + hi);
            detail::LinePoint p = eval(trial);
            if (!std::isfinite(p.phi) || p.phi > f0 + opt.c1 * p.alpha * dg0 ||
                p.phi >= bracket_lo.phi) {
                bracket_hi = p;
            } else {
                if (wolfe_ok(p)) {
                    accepted = p;
                    found = true;
                    break;
                }
                if (p.dphi * (bracket_hi.alpha - bracket_lo.alpha) >= 0.0) bracket_hi = bracket_lo;
                bracket_lo = p;
            }
            if (std::fabs(bracket_hi.alpha - bracket_lo.alpha) <=
                1e-14 * std::max(1.0, std::fabs(bracket_lo.alpha)))
                break;
        }
    }

    bool fallback = false;
    if (!found) {
        // Armijo backtracking along -g.
        fallback = true;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = -h.grad[i];
        dg0 = detail::dot(d, h.grad);
        double a = 1.0 / std::max(1.0, gnorm);
        for (int t = 0; t < 40; ++t) {
            detail::LinePoint p = eval(a);
            if (std::isfinite(p.phi) && p.phi <= f0 + opt.c1 * a * dg0) {
                accepted = p;
                found = true;
                break;
            }
            a *= 0.5;
        }
        if (!found) {
            result.status = LbfgsStatus::Failed;
            result.loss = f0;
            return result;
        }
    }

    // Commit the step. Every accepting branch breaks straight out of its
    // loop, so x_trial/g_trial still hold the accepted point.
    for (std::size_t i = 0; i < x.size(); ++i) x_trial[i] = x[i] + accepted.alpha * d[i];

    std::vector<double> s(x.size()), yv(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        s[i] = x_trial[i] - x[i];
        yv[i] = g_trial[i] - h.grad[i];
    }
    const double sy = detail::dot(s, yv);
    if (sy > opt.min_curvature) {
        h.s.push_back(std::move(s));
        h.y.push_back(std::move(yv));
        h.rho.push_back(1.0 / sy);
        while (static_cast<int>(h.s.size()) > opt.memory) {
            h.s.pop_front();
            h.y.pop_front();
            h.rho.pop_front();
        }
    }

    x = x_trial;
    h.grad = g_trial;
    h.fx = accepted.phi;
    ++h.iteration;
    result.status = fallback ? LbfgsStatus::FallbackAccepted : LbfgsStatus::Accepted;
    result.loss = accepted.phi;
    result.step_length = accepted.alpha;
    return result;
}

struct LbfgsResult {
    std::vector<double> x;
    double fx = 0.0;
    long iterations = 0;
    bool converged = false;
};

/// Run lbfgs_step until the gradient tolerance or the iteration cap.
inline LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, long max_iterations,
                                  const LbfgsOptions& opt = {}) {
    LbfgsHistory h;
    LbfgsResult out;
    out.x = std::move(x0);
    for (long it = 0; it < max_iterations; ++it) {
        const LbfgsStepResult r = lbfgs_step(f, out.x, h, opt);
        out.fx = r.loss;
        out.iterations = it + 1;
        if (r.status == LbfgsStatus::Converged) {
            out.converged = true;
            break;
        }
        if (r.status == LbfgsStatus::Failed) break;
    }
    return out;
}

} // namespace kantherm
