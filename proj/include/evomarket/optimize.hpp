#pragma once

#include <functional>
#include <span>
#include <vector>

namespace evomarket {

using ObjectiveFn = std::function<double(std::span<const double>)>;

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct MinimizeOptions {
    double tolerance = 1e-8; // relative objective-improvement stop
    int max_iterations = 500;
    double gradient_step = 1e-6; // central-difference step, scaled by |x|
};

/// Unconstrained quasi-Newton (BFGS) minimization with central-difference
/// gradients and Armijo backtracking line search. Non-finite objective values
/// are treated as +infinity, so callers can express constraints by rejection.
/// Deterministic: no internal randomness.
MinimizeResult minimize_bfgs(const ObjectiveFn& f, std::span<const double> x0,
                             const MinimizeOptions& options = {});

} // namespace evomarket
