#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace evomarket {

/// splitmix64 finalizer, used for seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from (master, stream). Used for per-run
/// seeds in ensembles and per-candidate seeds in calibration, so results do
/// not depend on execution order or thread count.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = splitmix64(master ^ 0x2545f4914f6cdd1dULL);
    return splitmix64(z + splitmix64(stream));
}

/// Seeded random source with explicitly implemented variate transforms.
///
/// The engine (mt19937_64) is fully specified by the standard; the usual
/// std::*_distribution adapters are not, so every transform here is written
/// out. A given seed therefore produces the same draw sequence on every
/// platform, which the reproducibility contract of the simulator relies on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1); safe under log().
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (cosine branch only; two draws per call).
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double exponential() { return -std::log(uniform_open()); }

    /// Poisson draw; inversion for small means, Hormann's PTRS rejection above.
    std::int64_t poisson(double mean);

    /// Marsaglia-Tsang gamma; shape > 0, scale > 0.
    double gamma(double shape, double scale);

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    /// Uniform integer in [0, n); n > 0. Rejection-free bound via modulo
    /// rejection to avoid bias.
    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::span<T> xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

} // namespace evomarket
