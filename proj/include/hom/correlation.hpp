#pragma once

#include "hom/types.hpp"

/// Analytic two-source correlation functions.
///
/// Each emitter has an intensity envelope p(t) = G exp(-G t) (G = 1/t1) and
/// a first-order coherence that decays at rate 1/t2 = G/2 + pure dephasing.
/// For one photon from each source on a 50/50 splitter the coincidence
/// density between the two outputs at delay tau is
///
///   C_perp(tau) = 1/4 K (exp(-G1|tau|) + exp(-G2|tau|)),  K = G1 G2 / (G1 + G2)
///   C_par(tau)  = C_perp(tau) - 1/2 M^2 K exp(-(g1 + g2)|tau|) cos(D tau)
///
/// with g_i = 1/t2_i, D the detuning difference and M the amplitude mode
/// overlap. Densities are per excitation pulse and per ps of delay.
///
/// Photon number: the main photon of emitter i is present with probability
/// eta_i; an additional, non-interfering photon follows with probability p_i
/// chosen so that the emitter's HBT center/side ratio equals its configured
/// multiphoton_residual. Mean photon number n_i = eta_i (1 + p_i).
namespace hom {

/// gamma* = 1/t2 - 1/(2 t1), in 1/ps. Throws if t2 exceeds the lifetime limit.
double pure_dephasing_rate(const EmitterParams &e);

/// Coherence time of a Lorentzian line with the given FWHM (GHz), in ps.
double t2_from_linewidth(double fwhm_ghz);
/// Inverse of t2_from_linewidth.
double linewidth_from_t2(double t2_ps);

/// Probability of the extra photon that makes HBT center/side equal `residual`.
double extra_photon_probability(double residual);
/// eta (1 + p_extra).
double mean_photon_number(const EmitterParams &e);

/// Cross-correlation of the prompt intensity envelopes of a and b:
/// integral of p_a(t) p_b(t + tau) dt. Asymmetric in tau unless a == b.
double envelope_cross_correlation(double tau_ps, const EmitterParams &a, const EmitterParams &b);

/// Uniform accidental density (per ps per pulse) implied by setup.background_rate.
double background_density(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup);

/// Coincidence density of the tau = 0 peak, including residual and background terms.
double center_peak_density(double tau_ps, const EmitterParams &e1, const EmitterParams &e2,
                           const SetupParams &setup);

/// Coincidence density of a side peak (photons from different pulses),
/// measured from that peak's centre, including the background offset.
double side_peak_density(double tau_from_peak_ps, const EmitterParams &e1, const EmitterParams &e2,
                         const SetupParams &setup);

/// Centre peak plus side peaks at k*rep_period, |k| = 1..n_side_peaks, plus
/// one uniform background, sampled on `grid`.
CorrelationCurve full_correlation(const TauGrid &grid, const EmitterParams &e1, const EmitterParams &e2,
                                  const SetupParams &setup, int n_side_peaks);

/// Convolution with the combined detector response. Grid edges are extended
/// with their end values, so constant offsets pass through unchanged.
CorrelationCurve convolve_with_irf(const CorrelationCurve &curve, const DetectorParams &d);

/// Peak areas of an analytic curve: sums over windows of width `window_ps`
/// centred on k*rep_period (fractional end bins). Uncertainties are zero.
PeakAreas curve_peak_areas(const CorrelationCurve &curve, double rep_period_ps, double window_ps);

/// (A_perp - A_par) / A_perp with first-order Poisson propagation.
Measured coalescence_probability(const PeakAreas &perp, const PeakAreas &par);

/// (g_perp - g_par) / g_perp using the curve values with |tau| <= window/2.
double postselected_coalescence(const CorrelationCurve &perp, const CorrelationCurve &par, double window_ps);

/// A / B for the given areas.
Measured coincidence_ratio(const PeakAreas &areas);

/// Closed-form coalescence probability for perfect overlap and no residuals:
/// 2 K (g1 + g2) / ((g1 + g2)^2 + D^2).
double max_coalescence(const EmitterParams &e1, const EmitterParams &e2);

/// Per-channel uniform noise rate (1/ps) that produces setup.background_rate
/// worth of accidental coincidences.
double noise_rate_for_background(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup);

/// Setup whose background_rate also accounts for the detector dark counts,
/// i.e. the accidentals a Monte Carlo run with this detector will show.
SetupParams with_dark_counts(const SetupParams &setup, const EmitterParams &e1, const EmitterParams &e2,
                             const DetectorParams &d);

/// Integrated areas (closed form, infinite windows) used for calibration.
struct AnalyticAreas {
    double center_perp = 0.0;
    double center_par = 0.0;
    double side = 0.0;
};
AnalyticAreas analytic_areas(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup);

/// Mode overlap and background that reproduce a measured coalescence
/// probability and A_par/B ratio for the given emitters.
struct Calibration {
    double mode_overlap = 1.0;
    double background_rate = 0.0;
};
Calibration calibrate_overlap_and_background(const EmitterParams &e1, const EmitterParams &e2,
                                             const SetupParams &setup, double target_pc, double target_ratio_par);

} // namespace hom
