#include "evomarket/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include <fftw3.h>

#include "evomarket/optimize.hpp"

namespace evomarket {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Unbiased (n-1) sample variance.
double sample_variance(std::span<const double> x) {
    const double m = sample_mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / static_cast<double>(x.size() - 1);
}

// Linear-interpolation quantile on a sorted copy (the convention used by
// numpy's default).
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// FFTW plan creation is not thread-safe; execution is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

PsdFit psd(std::span<const double> series, double dt) {
    if (series.size() < 16) throw std::invalid_argument("psd: series length must be >= 16");
    if (!(dt > 0.0)) throw std::invalid_argument("psd: dt must be > 0");
    const std::size_t n = series.size();
    const std::size_t n_out = n / 2 + 1;

    std::vector<double> in(series.begin(), series.end());
    std::vector<std::complex<double>> out(n_out);
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_plan plan = fftw_plan_dft_r2c_1d(
            static_cast<int>(n), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
            FFTW_ESTIMATE);
        // FFTW_ESTIMATE plans do not touch the input arrays at planning time,
        // and execution of an existing plan is thread-safe, but we keep the
        // whole transform under the lock: planning dominates anyway only for
        // tiny inputs.
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }

    // X^(f_k) = (1/sqrt(T)) * dt * FFT_k with T = n dt; S = |X^|^2.
    const double total_time = static_cast<double>(n) * dt;
    const double amp = dt / std::sqrt(total_time);
    PsdFit fit;
    fit.frequencies.reserve(n_out - 1);
    fit.power.reserve(n_out - 1);
    for (std::size_t k = 1; k < n_out; ++k) { // skip DC
        fit.frequencies.push_back(static_cast<double>(k) / total_time);
        fit.power.push_back(std::norm(out[k]) * amp * amp);
    }
    return fit;
}

PsdFit fit_psd_exponent(PsdFit fit, const FitBand& band) {
    const std::size_t n = fit.frequencies.size();
    if (fit.power.size() != n) throw std::invalid_argument("fit_psd_exponent: size mismatch");
    if (!(band.drop_high_fraction >= 0.0 && band.drop_high_fraction < 1.0))
        throw std::invalid_argument("fit_psd_exponent: drop_high_fraction must be in [0,1)");
    const std::size_t hi =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) *
                                            (1.0 - band.drop_high_fraction)));
    const std::size_t lo = band.skip_low;
    if (hi <= lo || hi - lo < 8)
        throw std::invalid_argument("fit_psd_exponent: fit band needs >= 8 points");

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t m = 0;
    for (std::size_t i = lo; i < hi; ++i) {
        if (!(fit.power[i] > 0.0)) continue; // exact zeros carry no log information
        const double x = std::log(fit.frequencies[i]);
        const double y = std::log(fit.power[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 8) throw std::invalid_argument("fit_psd_exponent: fewer than 8 usable points");
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    const double slope = (static_cast<double>(m) * sxy - sx * sy) / denom;

    fit.gamma = -slope;
    fit.gamma_fitted = true;
    fit.band_low = fit.frequencies[lo];
    fit.band_high = fit.frequencies[hi - 1];
    fit.band_points = m;
    return fit;
}

namespace {

struct GarchEval {
    double loglik = -kInf;
    std::vector<double> sigma;
};

// Log-likelihood of the GARCH(1,1) recursion; sigma2_0 is the fixed starting
// conditional variance (sample variance of the returns).
GarchEval garch_loglik(std::span<const double> r, double mu, double xi, double alpha,
                       double beta, double sigma2_0, bool want_path) {
    GarchEval eval;
    const std::size_t n = r.size();
    if (want_path) eval.sigma.reserve(n);
    constexpr double log2pi = 1.8378770664093453; // log(2*pi)
    double sigma2 = sigma2_0;
    double ll = 0.0;
    double prev_e2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) sigma2 = xi + alpha * prev_e2 + beta * sigma2;
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) return eval;
        const double e = r[t] - mu;
        ll -= 0.5 * (log2pi + std::log(sigma2) + e * e / sigma2);
        prev_e2 = e * e;
        if (want_path) eval.sigma.push_back(std::sqrt(sigma2));
    }
    if (!std::isfinite(ll)) return eval;
    eval.loglik = ll;
    return eval;
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

GarchFit garch11_fit(std::span<const double> returns) {
    if (returns.size() < 100)
        throw std::invalid_argument("garch11_fit: need at least 100 returns");
    for (double v : returns)
        if (!std::isfinite(v)) throw std::invalid_argument("garch11_fit: non-finite return");
    const double var = sample_variance(returns);
    if (!(var > 0.0)) throw std::invalid_argument("garch11_fit: constant series");
    const double mean = sample_mean(returns);

    // Parameters: x = (mu, log xi, logit(alpha+beta), logit(alpha/(alpha+beta))).
    auto unpack = [](std::span<const double> x, double& mu, double& xi, double& a,
                     double& b) {
        mu = x[0];
        xi = std::exp(x[1]);
        const double persistence = sigmoid(x[2]);
        const double fraction = sigmoid(x[3]);
        a = persistence * fraction;
        b = persistence * (1.0 - fraction);
    };
    ObjectiveFn negloglik = [&](std::span<const double> x) {
        double mu, xi, a, b;
        unpack(x, mu, xi, a, b);
        return -garch_loglik(returns, mu, xi, a, b, var, false).loglik;
    };

    // Multi-starts over (alpha, beta); xi targets the unconditional variance.
    const std::pair<double, double> starts[] = {
        {0.05, 0.90}, {0.10, 0.80}, {0.20, 0.60}, {0.05, 0.45}, {1e-4, 1e-4}};
    MinimizeOptions options;
    options.tolerance = 1e-8;
    options.max_iterations = 500;

    MinimizeResult best;
    best.value = kInf;
    for (const auto& [a0, b0] : starts) {
        const double p0 = a0 + b0;
        const double xi0 = std::max(var * (1.0 - p0), 1e-12);
        const double x0[4] = {mean, std::log(xi0), logit(p0), logit(a0 / p0)};
        MinimizeResult r = minimize_bfgs(negloglik, x0, options);
        if (r.value < best.value) best = std::move(r);
    }

    GarchFit fit;
    unpack(best.x, fit.mu, fit.xi, fit.alpha, fit.beta);
    fit.converged = best.converged;

    // Contract: never worse than the trivial (mean, sample variance, 0, 0) fit.
    const GarchEval trivial = garch_loglik(returns, mean, var, 0.0, 0.0, var, false);
    if (!(best.value < kInf) || -best.value < trivial.loglik) {
        fit.mu = mean;
        fit.xi = var;
        fit.alpha = 0.0;
        fit.beta = 0.0;
        fit.converged = true;
    }

    GarchEval eval = garch_loglik(returns, fit.mu, fit.xi, fit.alpha, fit.beta, var, true);
    fit.loglik = eval.loglik;
    fit.sigma = std::move(eval.sigma);
    return fit;
}

namespace {

// Average ranks (1-based) with tie groups sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> pearson_impl(std::span<const double> x, std::span<const double> y) {
    const double mx = sample_mean(x);
    const double my = sample_mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 3) throw std::invalid_argument("spearman: need at least 3 points");
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    return pearson_impl(rx, ry);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (x.size() < 3) throw std::invalid_argument("pearson: need at least 3 points");
    return pearson_impl(x, y);
}

namespace {

double silverman_bandwidth(std::span<const double> samples) {
    const double sd = std::sqrt(sample_variance(samples));
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0))
        throw std::invalid_argument("kde: degenerate sample set (zero spread)");
    return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

} // namespace

KdeEstimate kde(std::span<const double> samples, std::span<const double> grid) {
    if (samples.size() < 2) throw std::invalid_argument("kde: need at least 2 samples");
    const double h = silverman_bandwidth(samples);
    const double norm =
        1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    KdeEstimate est;
    est.bandwidth = h;
    est.grid.assign(grid.begin(), grid.end());
    est.density.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double acc = 0.0;
        for (double s : samples) {
            const double z = (grid[i] - s) / h;
            acc += std::exp(-0.5 * z * z);
        }
        est.density[i] = acc * norm;
    }
    return est;
}

KdeEstimate kde(std::span<const double> samples, std::size_t grid_size) {
    if (samples.size() < 2) throw std::invalid_argument("kde: need at least 2 samples");
    if (grid_size < 2) throw std::invalid_argument("kde: grid_size must be >= 2");
    const double h = silverman_bandwidth(samples);
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *mn - 3.0 * h;
    const double hi = *mx + 3.0 * h;
    std::vector<double> grid(grid_size);
    const double step = (hi - lo) / static_cast<double>(grid_size - 1);
    for (std::size_t i = 0; i < grid_size; ++i)
        grid[i] = lo + step * static_cast<double>(i);
    return kde(samples, grid);
}

const char* to_string(MarginalFamily family) {
    switch (family) {
    case MarginalFamily::Normal: return "normal";
    case MarginalFamily::LogNormal: return "lognormal";
    case MarginalFamily::StudentT: return "student_t";
    }
    return "unknown";
}

double DistFit::logpdf(double x) const {
    constexpr double log2pi = 1.8378770664093453;
    switch (family) {
    case MarginalFamily::Normal: {
        const double z = (x - location) / scale;
        return -0.5 * (log2pi + z * z) - std::log(scale);
    }
    case MarginalFamily::LogNormal: {
        if (!(x > 0.0)) return -kInf;
        const double lx = std::log(x);
        const double z = (lx - location) / scale;
        return -0.5 * (log2pi + z * z) - std::log(scale) - lx;
    }
    case MarginalFamily::StudentT: {
        const double z = (x - location) / scale;
        return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
               0.5 * std::log(dof * std::numbers::pi) - std::log(scale) -
               0.5 * (dof + 1.0) * std::log1p(z * z / dof);
    }
    }
    return -kInf;
}

double DistFit::pdf(double x) const { return std::exp(logpdf(x)); }

double loglik_under(const DistFit& fit, std::span<const double> samples) {
    double acc = 0.0;
    for (double v : samples) acc += fit.logpdf(v);
    return acc;
}

namespace {

double digamma(double x) {
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    return acc + std::log(x) - 0.5 * inv -
           inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0)));
}

// Student-t maximum likelihood via ECME (Liu & Rubin): weighted-mean/scale
// CM-steps with the latent Gamma weights, then a one-dimensional solve of the
// actual-likelihood stationarity condition for the degrees of freedom. The
// actual log-likelihood is non-decreasing across iterations, so the result
// can never fall below the moment-matched start.
DistFit fit_student_t_ecme(std::span<const double> samples) {
    const std::size_t n = samples.size();
    const double nd = static_cast<double>(n);
    const double mean = sample_mean(samples);
    const double var = sample_variance(samples);
    if (!(var > 0.0)) throw std::invalid_argument("fit_marginal: constant samples");

    double m = mean;
    double dof = 8.0;
    double s2 = var * (dof - 2.0) / dof; // moment-matched scale at the start

    DistFit fit;
    fit.family = MarginalFamily::StudentT;
    auto loglik_at = [&](double mm, double ss2, double nu) {
        fit.location = mm;
        fit.scale = std::sqrt(ss2);
        fit.dof = nu;
        return loglik_under(fit, samples);
    };

    constexpr double kDofLo = 0.05;
    constexpr double kDofHi = 1e6;
    std::vector<double> w(n);
    double ll = loglik_at(m, s2, dof);
    fit.converged = false;
    for (int iter = 0; iter < 300; ++iter) {
        // E-step weights at the current parameters.
        double sw = 0.0, swx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = samples[i] - m;
            w[i] = (dof + 1.0) / (dof + d * d / s2);
            sw += w[i];
            swx += w[i] * samples[i];
        }
        const double m_new = swx / sw;
        double s2_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = samples[i] - m_new;
            s2_new += w[i] * d * d;
        }
        s2_new /= nd;
        if (!(s2_new > 0.0)) break;

        // ECME dof step: solve the actual-likelihood condition with weights
        // recomputed at the updated location/scale.
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = samples[i] - m_new;
            const double wi = (dof + 1.0) / (dof + d * d / s2_new);
            c += std::log(wi) - wi;
        }
        c /= nd;
        const double offset =
            1.0 + c + digamma(0.5 * (dof + 1.0)) - std::log(0.5 * (dof + 1.0));
        auto phi = [&](double nu) {
            return std::log(0.5 * nu) - digamma(0.5 * nu) + offset;
        };
        double dof_new;
        if (phi(kDofLo) <= 0.0) {
            dof_new = kDofLo;
        } else if (phi(kDofHi) >= 0.0) {
            dof_new = kDofHi;
        } else {
            double lo = kDofLo, hi = kDofHi;
            for (int b = 0; b < 80; ++b) {
                const double mid = std::sqrt(lo * hi); // bisection in log space
                (phi(mid) > 0.0 ? lo : hi) = mid;
            }
            dof_new = std::sqrt(lo * hi);
        }

        const double ll_new = loglik_at(m_new, s2_new, dof_new);
        const bool done = std::abs(ll_new - ll) <= 1e-10 * (std::abs(ll_new) + 1.0);
        if (ll_new >= ll) {
            m = m_new;
            s2 = s2_new;
            dof = dof_new;
            ll = ll_new;
        }
        if (done) {
            fit.converged = true;
            break;
        }
    }
    fit.location = m;
    fit.scale = std::sqrt(s2);
    fit.dof = dof;
    fit.loglik = ll;
    return fit;
}

} // namespace

DistFit fit_marginal(std::span<const double> samples, MarginalFamily family) {
    if (samples.size() < 2) throw std::invalid_argument("fit_marginal: need >= 2 samples");
    for (double v : samples)
        if (!std::isfinite(v))
            throw std::invalid_argument("fit_marginal: non-finite sample");

    DistFit fit;
    fit.family = family;
    switch (family) {
    case MarginalFamily::Normal: {
        const double m = sample_mean(samples);
        double acc = 0.0;
        for (double v : samples) acc += (v - m) * (v - m);
        const double sd = std::sqrt(acc / static_cast<double>(samples.size())); // MLE: 1/n
        if (!(sd > 0.0)) throw std::invalid_argument("fit_marginal: constant samples");
        fit.location = m;
        fit.scale = sd;
        break;
    }
    case MarginalFamily::LogNormal: {
        std::size_t violations = 0;
        for (double v : samples)
            if (!(v > 0.0)) ++violations;
        if (violations > 0)
            throw std::invalid_argument("fit_marginal: lognormal requires positive samples (" +
                                        std::to_string(violations) + " violations)");
        std::vector<double> logs(samples.size());
        std::transform(samples.begin(), samples.end(), logs.begin(),
                       [](double v) { return std::log(v); });
        const double m = sample_mean(logs);
        double acc = 0.0;
        for (double v : logs) acc += (v - m) * (v - m);
        const double sd = std::sqrt(acc / static_cast<double>(logs.size()));
        if (!(sd > 0.0)) throw std::invalid_argument("fit_marginal: constant samples");
        fit.location = m;
        fit.scale = sd;
        break;
    }
    case MarginalFamily::StudentT:
        fit = fit_student_t_ecme(samples);
        break;
    }
    fit.loglik = loglik_under(fit, samples);
    return fit;
}

namespace {

std::vector<double> bin_counts(std::span<const double> samples, double lo, double width,
                               std::size_t bins) {
    std::vector<double> counts(bins, 0.0);
    for (double v : samples) {
        auto idx = static_cast<std::ptrdiff_t>((v - lo) / width);
        idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    return counts;
}

} // namespace

double empirical_kl(std::span<const double> p_samples, std::span<const double> q_samples,
                    const KlOptions& options) {
    if (p_samples.empty() || q_samples.empty())
        throw std::invalid_argument("empirical_kl: empty sample set");
    if (options.bins < 2) throw std::invalid_argument("empirical_kl: bins must be >= 2");

    double lo = kInf, hi = -kInf;
    for (double v : p_samples) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : q_samples) { lo = std::min(lo, v); hi = std::max(hi, v); }
    if (!(hi > lo)) return 0.0; // all mass in one point: identical distributions
    const double width = (hi - lo) / static_cast<double>(options.bins);

    std::vector<double> p = bin_counts(p_samples, lo, width, options.bins);
    std::vector<double> q = bin_counts(q_samples, lo, width, options.bins);
    const double np = static_cast<double>(p_samples.size() + options.bins);
    const double nq = static_cast<double>(q_samples.size() + options.bins);
    double kl = 0.0;
    for (std::size_t b = 0; b < options.bins; ++b) {
        const double pb = (p[b] + 1.0) / np; // add-one smoothing
        const double qb = (q[b] + 1.0) / nq;
        kl += pb * std::log(pb / qb);
    }
    return kl;
}

double kl_vs_density(std::span<const double> p_samples, const DistFit& q,
                     const KlOptions& options) {
    if (p_samples.empty()) throw std::invalid_argument("kl_vs_density: empty sample set");
    if (options.bins < 2) throw std::invalid_argument("kl_vs_density: bins must be >= 2");

    double lo = kInf, hi = -kInf;
    for (double v : p_samples) { lo = std::min(lo, v); hi = std::max(hi, v); }
    if (!(hi > lo)) return 0.0;
    const double width = (hi - lo) / static_cast<double>(options.bins);

    std::vector<double> p = bin_counts(p_samples, lo, width, options.bins);
    const double np = static_cast<double>(p_samples.size() + options.bins);

    // Parametric mass per bin at the midpoint, floored and renormalized over
    // the observed support so both arguments are distributions on the bins.
    std::vector<double> qmass(options.bins);
    double qtotal = 0.0;
    for (std::size_t b = 0; b < options.bins; ++b) {
        const double mid = lo + (static_cast<double>(b) + 0.5) * width;
        qmass[b] = std::max(q.pdf(mid) * width, 1e-300);
        qtotal += qmass[b];
    }
    double kl = 0.0;
    for (std::size_t b = 0; b < options.bins; ++b) {
        const double pb = (p[b] + 1.0) / np;
        kl += pb * std::log(pb / (qmass[b] / qtotal));
    }
    return std::max(kl, 0.0);
}

std::vector<double> standardize(std::span<const double> series) {
    std::vector<double> out(series.begin(), series.end());
    if (series.empty()) return out;
    const double m = sample_mean(series);
    double acc = 0.0;
    for (double v : series) acc += (v - m) * (v - m);
    const double sd = std::sqrt(acc / static_cast<double>(series.size()));
    for (double& v : out) v = sd > 0.0 ? (v - m) / sd : 0.0;
    return out;
}

} // namespace evomarket
