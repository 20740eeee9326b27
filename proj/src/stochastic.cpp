#include "evomarket/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace evomarket {

double sample_stable(const StableParams& params, Rng& rng) {
    if (!params.valid()) throw std::invalid_argument("invalid StableParams");
    // Chambers-Mallows-Stuck: V uniform on (-pi/2, pi/2), W ~ Exp(1). Open
    // uniforms keep cos(V) and the logarithm away from zero.
    const double v = std::numbers::pi * (rng.uniform_open() - 0.5);
    const double w = -std::log(rng.uniform_open());
    const double alpha = params.alpha;

    double x;
    if (std::abs(alpha - 2.0) < 1e-12) {
        x = 2.0 * std::sqrt(w) * std::sin(v); // Gaussian, sd sqrt(2)
    } else if (std::abs(alpha - 1.0) < 1e-12) {
        x = std::tan(v); // Cauchy
    } else {
        const double t = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha);
        const double s = std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
        x = t * s;
    }
    return params.scale * x;
}

void SdeSpec::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SdeSpec: dt must be > 0");
    if (!(theta >= 0.0)) throw std::invalid_argument("SdeSpec: theta must be >= 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("SdeSpec: sigma must be >= 0");
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw std::invalid_argument("SdeSpec: alpha must be in (0, 2]");
    if (!std::isfinite(x0)) throw std::invalid_argument("SdeSpec: x0 must be finite");
}

SdePath simulate_sde(const SdeSpec& spec, std::int64_t n_steps, Rng& rng) {
    spec.validate();
    if (n_steps < 0) throw std::invalid_argument("simulate_sde: n_steps must be >= 0");

    const double dt_scaling = std::pow(spec.dt, 1.0 / spec.alpha);
    const StableParams noise{spec.alpha, 1.0};

    SdePath path;
    path.x.reserve(static_cast<std::size_t>(n_steps) + 1);
    path.x.push_back(spec.x0);
    double x = spec.x0;
    for (std::int64_t i = 0; i < n_steps; ++i) {
        const double dl = spec.sigma * dt_scaling * sample_stable(noise, rng);
        switch (spec.kind) {
        case SdeKind::PriceLevy:
            x += dl;
            break;
        case SdeKind::OuPbid:
            x += spec.theta * (spec.target - x) * spec.dt + dl;
            break;
        case SdeKind::RwNshares:
            x += spec.mu * spec.dt + dl;
            break;
        case SdeKind::GeomVolpref:
            x += x * (spec.mu * spec.dt + dl);
            break;
        }
        if (spec.clamp) {
            double clamped = x;
            switch (spec.kind) {
            case SdeKind::PriceLevy:
                break;
            case SdeKind::OuPbid:
                clamped = std::clamp(x, 1e-6, 1.0 - 1e-6);
                break;
            case SdeKind::RwNshares:
            case SdeKind::GeomVolpref:
                clamped = std::max(x, 0.0);
                break;
            }
            if (clamped != x) {
                x = clamped;
                ++path.clamp_events;
            }
        }
        path.x.push_back(x);
    }
    return path;
}

} // namespace evomarket
