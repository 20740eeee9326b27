#pragma once

#include <string>

#include "evomarket/rng.hpp"

namespace evomarket {

/// A one-dimensional sampling distribution, used for agent parameter priors.
/// Parseable from config strings such as "uniform(0,1)", "gamma(2,5)",
/// "lognormal(0,0.5)" or "constant(10)".
struct DistSpec {
    enum class Family { Constant, Uniform, Gamma, LogNormal };

    Family family = Family::Constant;
    double a = 0.0; // constant value / lower bound / shape / log-mean
    double b = 0.0; // upper bound / scale / log-sd

    double sample(Rng& rng) const;

    std::string to_string() const;
    static DistSpec parse(const std::string& text);

    static DistSpec constant(double v) { return {Family::Constant, v, 0.0}; }
    static DistSpec uniform(double lo, double hi) { return {Family::Uniform, lo, hi}; }
    static DistSpec gamma(double shape, double scale) { return {Family::Gamma, shape, scale}; }
    static DistSpec lognormal(double mu, double sigma) {
        return {Family::LogNormal, mu, sigma};
    }
};

} // namespace evomarket
