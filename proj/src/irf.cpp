#include "hom/irf.hpp"

#include <cmath>
#include <numeric>

#include <gsl/gsl_sf_erf.h>

namespace hom::irf {

namespace {

double gaussian_cdf(double t, double sigma) { return 0.5 * std::erfc(-t / (sigma * M_SQRT2)); }

double laplace_cdf(double t, double b) { return t < 0.0 ? 0.5 * std::exp(t / b) : 1.0 - 0.5 * std::exp(-t / b); }

double exponential_cdf(double t, double mean) { return t <= 0.0 ? 0.0 : -std::expm1(-t / mean); }

// Ex-Gaussian CDF: Phi(t/s) - exp(s^2/(2 tau^2) - t/tau) Phi(t/s - s/tau).
// The second term is evaluated in log space; log_erfc stays finite where
// exp() and erfc() separately over/underflow.
double ex_gaussian_cdf(double t, double tau, double sigma) {
    const double z = t / sigma - sigma / tau;
    const double log_term = sigma * sigma / (2.0 * tau * tau) - t / tau + std::log(0.5) + gsl_sf_log_erfc(-z / M_SQRT2);
    return gaussian_cdf(t, sigma) - std::exp(log_term);
}

// CDF of Exp(tau) + Exp(b) (hypoexponential).
double hypoexponential_cdf(double t, double tau, double b) {
    if (t <= 0.0) return 0.0;
    if (std::abs(tau - b) < 1e-7 * tau) {
        const double x = t / tau;
        return -std::expm1(-x) - x * std::exp(-x);
    }
    return 1.0 - (tau * std::exp(-t / tau) - b * std::exp(-t / b)) / (tau - b);
}

} // namespace

ChannelJitter channel_jitter(const DetectorParams &d) {
    switch (d.irf_shape) {
    case IrfShape::gaussian:
        return {IrfShape::gaussian, d.irf_fwhm_ps * kGaussianFwhmToSigma / M_SQRT2};
    case IrfShape::two_sided_exponential:
        return {IrfShape::two_sided_exponential, d.irf_fwhm_ps * kLaplaceFwhmToScale};
    case IrfShape::delta:
        break;
    }
    return {IrfShape::delta, 0.0};
}

double combined_cdf(double t, const DetectorParams &d) {
    switch (d.irf_shape) {
    case IrfShape::gaussian:
        return gaussian_cdf(t, d.irf_fwhm_ps * kGaussianFwhmToSigma);
    case IrfShape::two_sided_exponential:
        return laplace_cdf(t, d.irf_fwhm_ps * kLaplaceFwhmToScale);
    case IrfShape::delta:
        break;
    }
    return t < 0.0 ? 0.0 : 1.0;
}

Kernel::Kernel(const DetectorParams &d, double spacing) {
    d.validate("detector.");
    if (d.irf_shape == IrfShape::delta) {
        weights_ = {1.0};
        return;
    }
    // Support wide enough that the discarded tails are below 1e-13.
    const double reach = d.irf_shape == IrfShape::gaussian ? 8.0 * d.irf_fwhm_ps * kGaussianFwhmToSigma
                                                           : 31.0 * d.irf_fwhm_ps * kLaplaceFwhmToScale;
    half_width_ = static_cast<long>(std::ceil(reach / spacing));
    weights_.resize(static_cast<size_t>(2 * half_width_ + 1));
    // Both responses are even, so fill k >= 0 from the lower tail (no
    // cancellation) and mirror; the kernel is then exactly symmetric.
    for (long k = 0; k <= half_width_; ++k) {
        const double lo = (static_cast<double>(k) - 0.5) * spacing;
        const double hi = (static_cast<double>(k) + 0.5) * spacing;
        const double w = combined_cdf(-lo, d) - combined_cdf(-hi, d);
        weights_[static_cast<size_t>(half_width_ + k)] = w;
        weights_[static_cast<size_t>(half_width_ - k)] = w;
    }
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    for (double &w : weights_) w /= total;
}

double decay_cdf(double t, double lifetime, const ChannelJitter &jitter) {
    switch (jitter.shape) {
    case IrfShape::gaussian:
        return ex_gaussian_cdf(t, lifetime, jitter.scale_ps);
    case IrfShape::two_sided_exponential:
        return hypoexponential_cdf(t, lifetime, jitter.scale_ps);
    case IrfShape::delta:
        break;
    }
    return exponential_cdf(t, lifetime);
}

} // namespace hom::irf
