#pragma once

#include <vector>

#include "hom/types.hpp"

namespace hom::irf {

/// FWHM -> standard deviation for a Gaussian.
inline constexpr double kGaussianFwhmToSigma = 0.42466090014400953;
/// FWHM -> scale b for a Laplace density exp(-|t|/b)/(2b).
inline constexpr double kLaplaceFwhmToScale = 0.72134752044448170;

/// Jitter of one detector channel, chosen so that the difference of two
/// independent channels has the combined response in DetectorParams.
///   gaussian:              N(0, scale^2)          (scale = sigma_combined/sqrt 2)
///   two_sided_exponential: Exp(mean = scale)      (difference is Laplace(scale))
///   delta:                 no jitter
struct ChannelJitter {
    IrfShape shape = IrfShape::delta;
    double scale_ps = 0.0;
};

ChannelJitter channel_jitter(const DetectorParams &d);

/// CDF of the combined (pairwise difference) response.
double combined_cdf(double t_ps, const DetectorParams &d);

/// Bin-integrated combined response on a grid of the given spacing, centred
/// on index `half_width()`. Weights sum to one.
class Kernel {
  public:
    Kernel(const DetectorParams &d, double spacing_ps);

    const std::vector<double> &weights() const { return weights_; }
    long half_width() const { return half_width_; }

  private:
    std::vector<double> weights_;
    long half_width_ = 0;
};

/// CDF at t of (Exp(lifetime) + channel jitter), i.e. a pulsed decay as seen
/// through one detector. Zero for t -> -inf, one for t -> +inf.
double decay_cdf(double t_ps, double lifetime_ps, const ChannelJitter &jitter);

} // namespace hom::irf
