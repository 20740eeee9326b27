#include "evomarket/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace evomarket {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded(const ObjectiveFn& f, std::span<const double> x) {
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
}

void gradient(const ObjectiveFn& f, const std::vector<double>& x, double step,
              std::vector<double>& g, std::vector<double>& scratch) {
    scratch = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x[i]));
        scratch[i] = x[i] + h;
        const double fp = guarded(f, scratch);
        scratch[i] = x[i] - h;
        const double fm = guarded(f, scratch);
        scratch[i] = x[i];
        g[i] = (std::isfinite(fp) && std::isfinite(fm)) ? (fp - fm) / (2.0 * h) : 0.0;
    }
}

} // namespace

MinimizeResult minimize_bfgs(const ObjectiveFn& f, std::span<const double> x0,
                             const MinimizeOptions& options) {
    if (x0.empty()) throw std::invalid_argument("minimize_bfgs: empty start point");
    const std::size_t n = x0.size();

    MinimizeResult result;
    result.x.assign(x0.begin(), x0.end());
    result.value = guarded(f, result.x);

    std::vector<double> g(n), g_new(n), direction(n), x_new(n), scratch(n);
    std::vector<double> s(n), y(n), hy(n);
    // Inverse Hessian approximation, row-major identity to start.
    std::vector<double> h_inv(n * n, 0.0);
    auto reset_h = [&] {
        std::fill(h_inv.begin(), h_inv.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) h_inv[i * n + i] = 1.0;
    };
    reset_h();
    gradient(f, result.x, options.gradient_step, g, scratch);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter + 1;

        // direction = -H_inv * g
        double dir_dot_g = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += h_inv[i * n + j] * g[j];
            direction[i] = -acc;
            dir_dot_g += direction[i] * g[i];
        }
        if (!(dir_dot_g < 0.0)) { // not a descent direction; restart steepest
            reset_h();
            dir_dot_g = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                direction[i] = -g[i];
                dir_dot_g += direction[i] * g[i];
            }
            if (!(dir_dot_g < 0.0)) { // gradient numerically zero
                result.converged = true;
                return result;
            }
        }

        // Armijo backtracking.
        const double c1 = 1e-4;
        double step_len = 1.0;
        double f_new = kInf;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < n; ++i)
                x_new[i] = result.x[i] + step_len * direction[i];
            f_new = guarded(f, x_new);
            if (f_new <= result.value + c1 * step_len * dir_dot_g) {
                accepted = true;
                break;
            }
            step_len *= 0.5;
        }
        if (!accepted) { // no progress possible along this direction
            result.converged = true;
            return result;
        }

        gradient(f, x_new, options.gradient_step, g_new, scratch);

        // BFGS inverse update with s = x_new - x, y = g_new - g.
        double sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - result.x[i];
            y[i] = g_new[i] - g[i];
            sy += s[i] * y[i];
        }
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            double yhy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += h_inv[i * n + j] * y[j];
                hy[i] = acc;
            }
            for (std::size_t i = 0; i < n; ++i) yhy += y[i] * hy[i];
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    h_inv[i * n + j] += rho * rho * yhy * s[i] * s[j] -
                                        rho * (s[i] * hy[j] + hy[i] * s[j]) +
                                        rho * s[i] * s[j];
                }
            }
        } else {
            reset_h(); // curvature condition failed; restart from identity
        }

        const double improvement = result.value - f_new;
        result.x = x_new;
        result.value = f_new;
        g.swap(g_new);

        if (improvement <= options.tolerance * (std::abs(result.value) + options.tolerance)) {
            result.converged = true;
            return result;
        }
    }
    return result; // budget exhausted; best iterate retained
}

} // namespace evomarket
