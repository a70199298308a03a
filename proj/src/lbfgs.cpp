#include "fvein/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "fvein/error.hpp"

namespace fvein {

namespace {

struct Trial {
    double step = 0.0;
    double cost = 0.0;
    double slope = 0.0;  // directional derivative at step
    Vector x;
    Vector grad;
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), clamped
// into the interior of [a, b] so the bracket always shrinks.
double cubic_step(const Trial& a, const Trial& b) {
    const double lo = std::min(a.step, b.step);
    const double hi = std::max(a.step, b.step);
    const double margin = 0.1 * (hi - lo);
    const double d1 = a.slope + b.slope - 3.0 * (a.cost - b.cost) / (a.step - b.step);
    const double disc = d1 * d1 - a.slope * b.slope;
    double step = 0.5 * (lo + hi);
    if (disc >= 0.0 && std::isfinite(a.cost) && std::isfinite(b.cost)) {
        const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
        const double denom = b.slope - a.slope + 2.0 * d2;
        if (denom != 0.0) {
            const double cand = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
            if (std::isfinite(cand)) step = cand;
        }
    }
    return std::clamp(step, lo + margin, hi - margin);
}

class LineSearch {
public:
    LineSearch(const Objective& f, const Vector& x, const Vector& dir, double f0, double slope0,
               const LbfgsOptions& opt, int& evaluations)
        : f_(f), x_(x), dir_(dir), f0_(f0), slope0_(slope0), opt_(opt), evaluations_(evaluations) {}

    // Returns true with `out` set to an accepted point.
    bool run(double initial_step, Trial& out) {
        Trial prev{0.0, f0_, slope0_, {}, {}};
        double step = initial_step;
        for (int i = 0; evals_ < opt_.max_line_search_evaluations; ++i) {
            Trial cur = evaluate(step);
            if (!armijo(cur) || (i > 0 && cur.cost >= prev.cost))
                return zoom(std::move(prev), std::move(cur), out);
            if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
                out = std::move(cur);
                return true;
            }
            if (cur.slope >= 0.0) return zoom(std::move(cur), std::move(prev), out);
            prev = std::move(cur);
            step *= 2.0;
        }
        return false;
    }

private:
    Trial evaluate(double step) {
        Trial t;
        t.step = step;
        t.x = x_ + step * dir_;
        t.grad.resize(x_.size());
        t.cost = f_(t.x, t.grad);
        ++evals_;
        ++evaluations_;
        if (!std::isfinite(t.cost) || !t.grad.allFinite()) {
            t.cost = std::numeric_limits<double>::infinity();
            t.slope = 0.0;
        } else {
            t.slope = t.grad.dot(dir_);
        }
        return t;
    }

    bool armijo(const Trial& t) const {
        return std::isfinite(t.cost) && t.cost <= f0_ + opt_.c1 * t.step * slope0_;
    }

    bool zoom(Trial lo, Trial hi, Trial& out) {
        while (evals_ < opt_.max_line_search_evaluations) {
            if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
            const double step = std::isfinite(hi.cost) ? cubic_step(lo, hi) : 0.5 * (lo.step + hi.step);
            Trial cur = evaluate(step);
            if (!armijo(cur) || cur.cost >= lo.cost) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
                out = std::move(cur);
                return true;
            }
            if (cur.slope * (hi.step - lo.step) >= 0.0) hi = std::move(lo);
            lo = std::move(cur);
        }
        // Out of budget: keep the best sufficient-decrease point if there is one.
        if (lo.step > 0.0 && armijo(lo) && lo.cost < f0_) {
            out = std::move(lo);
            return true;
        }
        return false;
    }

    const Objective& f_;
    const Vector& x_;
    const Vector& dir_;
    double f0_;
    double slope0_;
    const LbfgsOptions& opt_;
    int& evaluations_;
    int evals_ = 0;
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options,
                           const StepCallback& on_step) {
    require(options.max_iterations >= 0, "lbfgs: max_iterations must be non-negative");
    require(options.memory >= 1, "lbfgs: memory must be positive");
    require(0.0 < options.c1 && options.c1 < options.c2 && options.c2 < 1.0,
            "lbfgs: need 0 < c1 < c2 < 1");

    LbfgsResult r;
    r.x = std::move(x0);
    Vector grad(r.x.size());
    r.cost = objective(r.x, grad);
    r.evaluations = 1;
    if (!std::isfinite(r.cost) || !grad.allFinite())
        fail(ErrorKind::Numeric, "lbfgs: non-finite objective at starting point");
    r.gradient_norm = grad.norm();

    std::deque<Vector> s_hist;
    std::deque<Vector> y_hist;
    std::deque<double> rho_hist;

    while (true) {
        if (r.gradient_norm <= options.gradient_tolerance) {
            r.status = LbfgsStatus::Converged;
            break;
        }
        if (r.iterations >= options.max_iterations) {
            r.status = LbfgsStatus::MaxIterations;
            break;
        }

        // Two-loop recursion for dir = -H * grad.
        Vector q = grad;
        const std::size_t m = s_hist.size();
        std::vector<double> alpha(m);
        for (std::size_t i = m; i-- > 0;) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        for (std::size_t i = 0; i < m; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Vector dir = -q;
        double slope = grad.dot(dir);
        if (!(slope < 0.0)) {
            // Curvature history no longer gives descent; restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -grad;
            slope = -grad.squaredNorm();
        }

        const double initial_step =
            s_hist.empty() ? std::min(1.0, 1.0 / r.gradient_norm) : 1.0;
        LineSearch search(objective, r.x, dir, r.cost, slope, options, r.evaluations);
        Trial accepted;
        if (!search.run(initial_step, accepted)) {
            r.status = LbfgsStatus::LineSearchFailed;
            break;
        }

        Vector s = accepted.x - r.x;
        Vector y = accepted.grad - grad;
        const double sy = s.dot(y);
        r.x = std::move(accepted.x);
        grad = std::move(accepted.grad);
        r.cost = accepted.cost;
        r.gradient_norm = grad.norm();
        ++r.iterations;
        r.cost_trace.push_back(r.cost);

        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (static_cast<int>(s_hist.size()) == options.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }
        if (on_step) on_step(r.iterations, r.x, r.cost);
    }
    return r;
}

}  // namespace fvein
