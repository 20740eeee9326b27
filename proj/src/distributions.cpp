#include "evomarket/distributions.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace evomarket {

double DistSpec::sample(Rng& rng) const {
    switch (family) {
    case Family::Constant: return a;
    case Family::Uniform: return rng.uniform(a, b);
    case Family::Gamma: return rng.gamma(a, b);
    case Family::LogNormal: return rng.lognormal(a, b);
    }
    throw std::logic_error("DistSpec: unknown family");
}

std::string DistSpec::to_string() const {
    char buf[96];
    switch (family) {
    case Family::Constant: std::snprintf(buf, sizeof buf, "constant(%g)", a); break;
    case Family::Uniform: std::snprintf(buf, sizeof buf, "uniform(%g,%g)", a, b); break;
    case Family::Gamma: std::snprintf(buf, sizeof buf, "gamma(%g,%g)", a, b); break;
    case Family::LogNormal: std::snprintf(buf, sizeof buf, "lognormal(%g,%g)", a, b); break;
    }
    return buf;
}

DistSpec DistSpec::parse(const std::string& text) {
    std::string s;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    }
    const auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')') {
        throw std::invalid_argument("distribution spec must look like name(args): " + text);
    }
    const std::string name = s.substr(0, open);
    const std::string args = s.substr(open + 1, s.size() - open - 2);

    double a = 0.0;
    double b = 0.0;
    int n_args = 0;
    if (std::sscanf(args.c_str(), "%lf,%lf", &a, &b) == 2) {
        n_args = 2;
    } else if (std::sscanf(args.c_str(), "%lf", &a) == 1) {
        n_args = 1;
    } else {
        throw std::invalid_argument("cannot parse distribution arguments: " + text);
    }

    auto need = [&](int want) {
        if (n_args != want) {
            throw std::invalid_argument("wrong number of arguments in: " + text);
        }
    };
    if (name == "constant") {
        need(1);
        return DistSpec::constant(a);
    }
    if (name == "uniform") {
        need(2);
        if (!(a <= b)) throw std::invalid_argument("uniform bounds out of order: " + text);
        return DistSpec::uniform(a, b);
    }
    if (name == "gamma") {
        need(2);
        if (!(a > 0.0) || !(b > 0.0)) {
            throw std::invalid_argument("gamma needs positive shape and scale: " + text);
        }
        return DistSpec::gamma(a, b);
    }
    if (name == "lognormal") {
        need(2);
        if (!(b >= 0.0)) throw std::invalid_argument("lognormal needs sigma >= 0: " + text);
        return DistSpec::lognormal(a, b);
    }
    throw std::invalid_argument("unknown distribution family: " + name);
}

} // namespace evomarket
