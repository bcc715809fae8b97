#pragma once

#include <functional>
#include <span>
#include <vector>

namespace evtfair {

struct NelderMeadOptions {
    int max_iterations = 2000;
    // Stop once every vertex lies within this distance (max-norm) of the best.
    double diameter_tol = 1e-8;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Derivative-free simplex minimizer. The objective may return +inf to mark
// infeasible points; x0 must be feasible.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> x0, std::vector<double> step,
                             const NelderMeadOptions& options = {});

}  // namespace evtfair
