#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace evomarket {

/// Periodogram of a series plus, once fitted, the power-law exponent gamma of
/// S(f) ~ f^(-gamma) over the fit band. Frequencies are ordinary (cycles per
/// day with the default dt), DC excluded.
struct PsdFit {
    std::vector<double> frequencies;
    std::vector<double> power;
    double gamma = 0.0;
    bool gamma_fitted = false;
    double band_low = 0.0;  // first frequency used by the fit
    double band_high = 0.0; // last frequency used by the fit
    std::size_t band_points = 0;
};

/// Fit-band rule: drop the lowest `skip_low` Fourier frequencies (drift
/// leakage) and the top `drop_high_fraction` of frequencies (discretization
/// artifacts).
struct FitBand {
    std::size_t skip_low = 2;
    double drop_high_fraction = 0.10;
};

/// Periodogram via the finite-interval Fourier transform
/// X^(f) = (1/sqrt(T)) sum_t X(t) e^(-i 2 pi f t dt) dt, S = |X^|^2, at the
/// Fourier frequencies k/(n dt), k = 1..n/2. Requires length >= 16.
PsdFit psd(std::span<const double> series, double dt = 1.0 / 24.0);

/// Least-squares slope of log power against log frequency over the band,
/// negated. Requires at least 8 band points. Returns the input with gamma
/// and the band interval filled in.
PsdFit fit_psd_exponent(PsdFit fit, const FitBand& band = {});

/// GARCH(1,1) with constant mean: r(t) = mu + e(t), e(t) = sigma(t) z(t),
/// sigma^2(t) = xi + alpha e^2(t-1) + beta sigma^2(t-1), z ~ N(0,1).
struct GarchFit {
    double mu = 0.0;
    double xi = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> sigma; // conditional standard deviations, per return
    double loglik = 0.0;
    bool converged = false;
};

/// Gaussian maximum likelihood over (mu, xi, alpha, beta) with xi > 0,
/// alpha, beta >= 0, alpha + beta < 1, via quasi-Newton on log/logit
/// transformed parameters with multi-start. sigma^2(0) is the sample
/// variance. Rejects constant series.
GarchFit garch11_fit(std::span<const double> returns);

/// Spearman rank correlation with average-rank ties. Returns nullopt when
/// either argument has zero rank variance (undefined correlation).
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

/// Pearson correlation; nullopt when either variance is zero.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct KdeEstimate {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
};

/// Gaussian-kernel density with the Silverman bandwidth
/// h = 0.9 min(sd, IQR/1.34) n^(-1/5), evaluated on the given grid.
/// Requires >= 2 samples with nonzero variance.
KdeEstimate kde(std::span<const double> samples, std::span<const double> grid);

/// Same, on an automatic regular grid of `grid_size` points spanning
/// [min - 3h, max + 3h].
KdeEstimate kde(std::span<const double> samples, std::size_t grid_size = 256);

enum class MarginalFamily { Normal, LogNormal, StudentT };

const char* to_string(MarginalFamily family);

/// A fitted univariate marginal. For Normal: location = mean, scale = sd.
/// For LogNormal: location/scale are the log-space Gaussian parameters.
/// For StudentT: location, scale, and dof (degrees of freedom).
struct DistFit {
    MarginalFamily family = MarginalFamily::Normal;
    double location = 0.0;
    double scale = 1.0;
    double dof = 0.0; // StudentT only
    double loglik = 0.0;
    bool converged = true;

    double logpdf(double x) const;
    double pdf(double x) const;
};

/// Maximum-likelihood fit. Normal and LogNormal are closed form (LogNormal
/// requires strictly positive samples); StudentT maximizes the likelihood
/// numerically over (location, log scale, log dof) with multi-start.
DistFit fit_marginal(std::span<const double> samples, MarginalFamily family);

/// Log-likelihood of samples under an already-fitted marginal.
double loglik_under(const DistFit& fit, std::span<const double> samples);

struct KlOptions {
    std::size_t bins = 64;
};

/// Histogram estimate of KL(p || q) from two sample sets: equal-width bins
/// spanning the pooled range, add-one smoothing on both count vectors.
/// Always finite and >= 0.
double empirical_kl(std::span<const double> p_samples, std::span<const double> q_samples,
                    const KlOptions& options = {});

/// Histogram estimate of KL(p || q) where q is a fitted parametric density:
/// bins span the p-sample range, p gets add-one smoothing, q is the fitted
/// density mass per bin renormalized over the same support.
double kl_vs_density(std::span<const double> p_samples, const DistFit& q,
                     const KlOptions& options = {});

/// Shifts and scales to zero mean, unit variance. A constant series maps to
/// all zeros.
std::vector<double> standardize(std::span<const double> series);

} // namespace evomarket
