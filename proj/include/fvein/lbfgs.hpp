#pragma once

#include <functional>
#include <vector>

#include "fvein/numerics.hpp"

namespace fvein {

// Objective callback: returns f(x) and writes the gradient into grad
// (already sized to x.size()).
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct LbfgsOptions {
    int max_iterations = 700;
    int memory = 20;
    double c1 = 1e-4;  // sufficient decrease
    double c2 = 0.9;   // curvature
    double gradient_tolerance = 1e-7;
    int max_line_search_evaluations = 40;
};

enum class LbfgsStatus { Converged, MaxIterations, LineSearchFailed };

struct LbfgsResult {
    Vector x;
    double cost = 0.0;
    std::vector<double> cost_trace;  // cost after each accepted step
    int iterations = 0;
    int evaluations = 0;
    double gradient_norm = 0.0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
};

// Called after each accepted step with the 1-based iteration count.
using StepCallback = std::function<void(int iteration, const Vector& x, double cost)>;

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
/// safeguarded cubic zoom).
///
/// A line search that cannot find an acceptable step ends the run with
/// LineSearchFailed; a non-finite objective at the starting point raises a
/// numeric error. Trial points with non-finite cost are treated as
/// overshoots and the step is shrunk.
LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options,
                           const StepCallback& on_step = {});

}  // namespace fvein
