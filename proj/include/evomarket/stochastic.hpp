#pragma once

#include <cstdint>
#include <vector>

#include "evomarket/rng.hpp"

namespace evomarket {

/// Symmetric alpha-stable law (skew and location fixed at zero).
struct StableParams {
    double alpha = 2.0; // tail exponent in (0, 2]
    double scale = 1.0;

    bool valid() const { return alpha > 0.0 && alpha <= 2.0 && scale > 0.0; }
};

/// One symmetric alpha-stable variate via the Chambers-Mallows-Stuck
/// construction. At alpha = 2 the law is Gaussian with standard deviation
/// scale * sqrt(2). Consumes exactly two uniforms (angle, then exponential).
double sample_stable(const StableParams& params, Rng& rng);

enum class SdeKind : std::uint8_t {
    PriceLevy,   // dX = sigma dL
    OuPbid,      // dx = theta (target - x) dt + sigma dL
    RwNshares,   // dx = mu dt + sigma dL
    GeomVolpref, // dx = x (mu dt + sigma dL)
};

/// Euler-Maruyama specification for one of the four model equations. The
/// noise increment per step is dL = dt^(1/alpha) * stable(alpha, 1), scaled
/// by sigma.
struct SdeSpec {
    SdeKind kind = SdeKind::PriceLevy;
    double theta = 0.0;  // OU restoring rate (OuPbid only)
    double target = 0.5; // OU stationary target (OuPbid only)
    double mu = 0.0;     // drift rate (RwNshares, GeomVolpref)
    double sigma = 1.0;  // noise scale
    double alpha = 2.0;  // stable tail exponent
    double dt = 1.0 / 24.0;
    double x0 = 0.0;
    bool clamp = true; // keep paths inside the parameter's domain

    void validate() const;
};

struct SdePath {
    std::vector<double> x; // length n_steps + 1, x[0] = x0
    std::int64_t clamp_events = 0;
};

/// Simulates the specified equation for n_steps Euler-Maruyama steps.
/// Domain clamps (when enabled): OuPbid paths are clipped to
/// [1e-6, 1 - 1e-6]; RwNshares and GeomVolpref paths are floored at 0;
/// PriceLevy is unclamped. Each clamp that changes the state is counted.
SdePath simulate_sde(const SdeSpec& spec, std::int64_t n_steps, Rng& rng);

} // namespace evomarket
