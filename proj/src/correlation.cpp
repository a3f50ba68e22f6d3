#include "hom/correlation.hpp"

#include <algorithm>
#include <cmath>

#include "hom/detail/window.hpp"
#include "hom/irf.hpp"

namespace hom {

namespace {

double reduced_rate(const EmitterParams &a, const EmitterParams &b) {
    const double ga = a.decay_rate();
    const double gb = b.decay_rate();
    return ga * gb / (ga + gb);
}

double side_level(const EmitterParams &e1, const EmitterParams &e2) {
    const double n = mean_photon_number(e1) + mean_photon_number(e2);
    return 0.25 * n * n;
}

// Centre-peak coincidences without the uniform background.
double center_signal(double tau, const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup) {
    const double at = std::abs(tau);
    const double g1 = e1.decay_rate();
    const double g2 = e2.decay_rate();
    const double k = reduced_rate(e1, e2);
    const double n1 = mean_photon_number(e1);
    const double n2 = mean_photon_number(e2);

    double c = 0.25 * n1 * n2 * k * (std::exp(-g1 * at) + std::exp(-g2 * at));
    c += 0.25 * e1.multiphoton_residual * n1 * n1 * 0.5 * g1 * std::exp(-g1 * at);
    c += 0.25 * e2.multiphoton_residual * n2 * n2 * 0.5 * g2 * std::exp(-g2 * at);

    if (setup.polarization == Polarization::parallel) {
        const double m2 = setup.mode_overlap * setup.mode_overlap;
        const double gamma = e1.coherence_rate() + e2.coherence_rate();
        const double delta = e1.detuning_rad_per_ps - e2.detuning_rad_per_ps;
        c -= 0.5 * m2 * e1.efficiency * e2.efficiency * k * std::exp(-gamma * at) * std::cos(delta * tau);
    }
    // The interference term never exceeds the distinguishable part; clip rounding noise.
    return std::max(c, 0.0);
}

double side_signal(double tau, const EmitterParams &e1, const EmitterParams &e2) {
    const double n1 = mean_photon_number(e1);
    const double n2 = mean_photon_number(e2);
    return 0.25 * (n1 * n1 * envelope_cross_correlation(tau, e1, e1) + n1 * n2 * envelope_cross_correlation(tau, e1, e2) +
                   n2 * n1 * envelope_cross_correlation(tau, e2, e1) + n2 * n2 * envelope_cross_correlation(tau, e2, e2));
}

void validate_pair(const EmitterParams &e1, const EmitterParams &e2) {
    e1.validate("emitters[0].");
    e2.validate("emitters[1].");
}

} // namespace

double pure_dephasing_rate(const EmitterParams &e) {
    e.validate();
    return std::max(0.0, 1.0 / e.t2_ps - 0.5 / e.t1_ps);
}

double t2_from_linewidth(double fwhm_ghz) {
    if (!(fwhm_ghz > 0.0) || !std::isfinite(fwhm_ghz)) throw ParameterError("fwhm_ghz: must be positive");
    // 1 GHz = 1e-3 / ps.
    return 1.0 / (M_PI * fwhm_ghz * 1e-3);
}

double linewidth_from_t2(double t2_ps) {
    if (!(t2_ps > 0.0) || !std::isfinite(t2_ps)) throw ParameterError("t2_ps: must be positive");
    return 1.0 / (M_PI * t2_ps * 1e-3);
}

double extra_photon_probability(double residual) {
    if (!(residual >= 0.0 && residual <= 0.5)) throw ParameterError("multiphoton_residual: must lie in [0,0.5]");
    // Smaller root of r (1+p)^2 = 2p, rationalised to avoid cancellation at small r.
    return residual / ((1.0 - residual) + std::sqrt(1.0 - 2.0 * residual));
}

double mean_photon_number(const EmitterParams &e) {
    return e.efficiency * (1.0 + extra_photon_probability(e.multiphoton_residual));
}

double envelope_cross_correlation(double tau, const EmitterParams &a, const EmitterParams &b) {
    const double k = reduced_rate(a, b);
    return tau >= 0.0 ? k * std::exp(-b.decay_rate() * tau) : k * std::exp(a.decay_rate() * tau);
}

double background_density(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup) {
    return setup.background_rate * side_level(e1, e2) / setup.rep_period_ps;
}

double center_peak_density(double tau, const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup) {
    validate_pair(e1, e2);
    setup.validate("setup.");
    return center_signal(tau, e1, e2, setup) + background_density(e1, e2, setup);
}

double side_peak_density(double tau, const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup) {
    validate_pair(e1, e2);
    setup.validate("setup.");
    return side_signal(tau, e1, e2) + background_density(e1, e2, setup);
}

CorrelationCurve full_correlation(const TauGrid &grid, const EmitterParams &e1, const EmitterParams &e2,
                                  const SetupParams &setup, int n_side_peaks) {
    validate_pair(e1, e2);
    setup.validate("setup.");
    if (n_side_peaks < 0) throw ParameterError("n_side_peaks: must be non-negative");
    const double t2_min = std::min(e1.t2_ps, e2.t2_ps);
    if (grid.spacing_ps > t2_min / 10.0) {
        throw ParameterError("grid.spacing_ps: coarser than t2_min/10 = " + std::to_string(t2_min / 10.0) + " ps");
    }
    const double needed = (n_side_peaks + 0.5) * setup.rep_period_ps;
    if (grid.half_range_ps < needed * (1.0 - 1e-12)) {
        throw ParameterError("grid.half_range_ps: must cover (n_side_peaks + 1/2) * rep_period = " +
                             std::to_string(needed) + " ps");
    }

    CorrelationCurve out;
    out.label = setup.polarization;
    out.tau_ps = grid.points();
    out.density.resize(out.tau_ps.size());
    const double bg = background_density(e1, e2, setup);
    for (size_t i = 0; i < out.tau_ps.size(); ++i) {
        const double tau = out.tau_ps[i];
        double c = center_signal(tau, e1, e2, setup) + bg;
        for (int k = 1; k <= n_side_peaks; ++k) {
            const double shift = k * setup.rep_period_ps;
            c += side_signal(tau - shift, e1, e2) + side_signal(tau + shift, e1, e2);
        }
        out.density[i] = c;
    }
    return out;
}

CorrelationCurve convolve_with_irf(const CorrelationCurve &curve, const DetectorParams &d) {
    curve.validate();
    d.validate("detector.");
    if (d.irf_shape == IrfShape::delta) return curve;
    const double h = curve.spacing();
    if (h > d.irf_fwhm_ps / 8.0) {
        throw ParameterError("grid spacing " + std::to_string(h) + " ps exceeds irf_fwhm/8 = " +
                             std::to_string(d.irf_fwhm_ps / 8.0) + " ps");
    }
    const irf::Kernel kernel(d, h);
    const auto &w = kernel.weights();
    const long hw = kernel.half_width();
    const long n = static_cast<long>(curve.density.size());

    CorrelationCurve out = curve;
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long k = -hw; k <= hw; ++k) {
            const long j = std::clamp(i - k, 0L, n - 1);
            acc += w[static_cast<size_t>(k + hw)] * curve.density[static_cast<size_t>(j)];
        }
        out.density[static_cast<size_t>(i)] = acc;
    }
    return out;
}

PeakAreas curve_peak_areas(const CorrelationCurve &curve, double rep_period, double window) {
    curve.validate();
    if (!(rep_period > 0.0)) throw ParameterError("rep_period_ps: must be positive");
    if (!(window > 0.0) || window > rep_period) throw ParameterError("window_ps: must lie in (0, rep_period]");
    const double h = curve.spacing();
    const double lo_edge = curve.tau_ps.front() - 0.5 * h;
    const double hi_edge = curve.tau_ps.back() + 0.5 * h;
    auto area = [&](double center) {
        return detail::window_sum(curve.density.size(), curve.tau_ps.front(), h, center - 0.5 * window,
                                  center + 0.5 * window, [&](size_t i) { return curve.density[i]; })
                   .first *
               h;
    };

    PeakAreas out;
    out.rep_period_ps = rep_period;
    out.window_ps = window;
    out.center = {area(0.0), 0.0};
    double sum = 0.0;
    const int kmax = static_cast<int>(std::floor(hi_edge / rep_period)) + 1;
    for (int k = -kmax; k <= kmax; ++k) {
        if (k == 0) continue;
        const double c = k * rep_period;
        if (c - 0.5 * window < lo_edge - 1e-9 * h || c + 0.5 * window > hi_edge + 1e-9 * h) continue;
        const double a = area(c);
        out.side_index.push_back(k);
        out.side.push_back({a, 0.0});
        sum += a;
    }
    if (!out.side.empty()) out.side_mean = {sum / static_cast<double>(out.side.size()), 0.0};
    return out;
}

Measured coalescence_probability(const PeakAreas &perp, const PeakAreas &par) {
    const double a_perp = perp.center.value;
    const double a_par = par.center.value;
    if (!(a_perp > 0.0)) throw ParameterError("A_perp: must be positive");
    const double pc = (a_perp - a_par) / a_perp;
    const double d_perp = a_par / (a_perp * a_perp);
    const double d_par = 1.0 / a_perp;
    const double var = d_perp * d_perp * perp.center.sigma * perp.center.sigma +
                       d_par * d_par * par.center.sigma * par.center.sigma;
    return {pc, std::sqrt(var)};
}

double postselected_coalescence(const CorrelationCurve &perp, const CorrelationCurve &par, double window) {
    perp.validate();
    par.validate();
    if (perp.tau_ps != par.tau_ps) throw ParameterError("curves: grids differ");
    const double h = perp.spacing();
    if (window < h * (1.0 - 1e-9)) throw ParameterError("window_ps: smaller than the grid spacing");
    double g_perp = 0.0;
    double g_par = 0.0;
    size_t used = 0;
    for (size_t i = 0; i < perp.tau_ps.size(); ++i) {
        if (std::abs(perp.tau_ps[i]) <= 0.5 * window + 1e-9 * h) {
            g_perp += perp.density[i];
            g_par += par.density[i];
            ++used;
        }
    }
    if (used == 0) throw ParameterError("window_ps: contains no grid points");
    if (!(g_perp > 0.0)) throw ParameterError("window_ps: orthogonal curve is zero inside the window");
    return (g_perp - g_par) / g_perp;
}

Measured coincidence_ratio(const PeakAreas &areas) {
    if (areas.side.empty()) throw ParameterError("side peaks: none available");
    const double b = areas.side_mean.value;
    if (!(b > 0.0)) throw ParameterError("B: must be positive");
    const double a = areas.center.value;
    const double r = a / b;
    const double rel_b = areas.side_mean.sigma / b;
    const double sigma = std::sqrt(std::pow(areas.center.sigma / b, 2) + r * r * rel_b * rel_b);
    return {r, sigma};
}

double max_coalescence(const EmitterParams &e1, const EmitterParams &e2) {
    validate_pair(e1, e2);
    const double k = reduced_rate(e1, e2);
    const double gamma = e1.coherence_rate() + e2.coherence_rate();
    const double delta = e1.detuning_rad_per_ps - e2.detuning_rad_per_ps;
    return 2.0 * k * gamma / (gamma * gamma + delta * delta);
}

double noise_rate_for_background(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup) {
    const double n = mean_photon_number(e1) + mean_photon_number(e2);
    const double target = setup.background_rate * side_level(e1, e2);
    if (target == 0.0) return 0.0;
    // d^2 T^2 + d T n = target
    return 0.5 * (-n + std::sqrt(n * n + 4.0 * target)) / setup.rep_period_ps;
}

SetupParams with_dark_counts(const SetupParams &setup, const EmitterParams &e1, const EmitterParams &e2,
                             const DetectorParams &d) {
    SetupParams out = setup;
    const double s = side_level(e1, e2);
    if (d.dark_rate_per_ps == 0.0 || s == 0.0) return out;
    const double rate = noise_rate_for_background(e1, e2, setup) + d.dark_rate_per_ps;
    const double n = mean_photon_number(e1) + mean_photon_number(e2);
    const double t = setup.rep_period_ps;
    const double density = rate * n + rate * rate * t;
    out.background_rate = density * t / s;
    return out;
}

AnalyticAreas analytic_areas(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup) {
    validate_pair(e1, e2);
    setup.validate("setup.");
    const double n1 = mean_photon_number(e1);
    const double n2 = mean_photon_number(e2);
    const double side = side_level(e1, e2);
    const double bg = setup.background_rate * side;
    AnalyticAreas a;
    a.side = side + bg;
    a.center_perp = 0.5 * n1 * n2 + 0.25 * (e1.multiphoton_residual * n1 * n1 + e2.multiphoton_residual * n2 * n2) + bg;
    const double m2 = setup.mode_overlap * setup.mode_overlap;
    a.center_par = a.center_perp - m2 * e1.efficiency * e2.efficiency * 0.5 * max_coalescence(e1, e2);
    return a;
}

Calibration calibrate_overlap_and_background(const EmitterParams &e1, const EmitterParams &e2,
                                             const SetupParams &setup, double target_pc, double target_ratio) {
    SetupParams bare = setup;
    bare.background_rate = 0.0;
    bare.mode_overlap = 1.0;
    const AnalyticAreas a = analytic_areas(e1, e2, bare);
    const double s = a.side;
    const double c0 = a.center_perp;
    const double i0 = a.center_perp - a.center_par;
    const double keep = 1.0 - target_pc;
    if (!(keep - target_ratio != 0.0) || !(i0 > 0.0)) throw ParameterError("calibration: degenerate targets");
    const double bg = (target_ratio * s - keep * c0) / (s * (keep - target_ratio));
    const double m2 = target_pc * (c0 + bg * s) / i0;
    if (!(bg >= 0.0)) throw ParameterError("calibration: targets need a negative background");
    if (!(m2 >= 0.0 && m2 <= 1.0)) throw ParameterError("calibration: targets need mode overlap outside [0,1]");
    return {std::sqrt(m2), bg};
}

} // namespace hom
