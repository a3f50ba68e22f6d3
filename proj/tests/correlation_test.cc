#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hom/correlation.hpp"
#include "oracles.hpp"

using namespace hom;

namespace {

EmitterParams emitter(double t1, double t2) {
    EmitterParams e;
    e.t1_ps = t1;
    e.t2_ps = t2;
    return e;
}

SetupParams setup_with(Polarization p, double overlap = 1.0) {
    SetupParams s;
    s.polarization = p;
    s.mode_overlap = overlap;
    return s;
}

const EmitterParams kDot1 = emitter(610.0, 580.0);
const EmitterParams kDot2 = emitter(950.0, 390.0);

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(pure_dephasing_rate, examples) {
    EXPECT_EQ(pure_dephasing_rate(emitter(500.0, 1000.0)), 0.0);
    EXPECT_NEAR(pure_dephasing_rate(kDot1), 1.0 / 580.0 - 1.0 / 1220.0, 1e-18);
    EXPECT_NEAR(pure_dephasing_rate(kDot1), 9.04e-4, 5e-7);
    EXPECT_NEAR(pure_dephasing_rate(kDot2), 1.0 / 390.0 - 1.0 / 1900.0, 1e-18);
    EXPECT_THROW(pure_dephasing_rate(emitter(500.0, 1001.0)), ParameterError);
}

TEST(t2_from_linewidth, published_linewidths) {
    EXPECT_NEAR(t2_from_linewidth(0.55), 1.0 / (M_PI * 0.55e-3), 1e-9);
    EXPECT_NEAR(t2_from_linewidth(0.55), 580.0, 20.0);
    EXPECT_NEAR(t2_from_linewidth(0.55), 579.0, 0.5);
    EXPECT_NEAR(t2_from_linewidth(0.81), 390.0, 20.0);
    EXPECT_NEAR(t2_from_linewidth(0.81), 393.0, 0.5);
}

TEST(t2_from_linewidth, scaling_round_trip_and_errors) {
    EXPECT_DOUBLE_EQ(t2_from_linewidth(1.1), 0.5 * t2_from_linewidth(0.55));
    for (double t2 : {1.0, 390.0, 578.75, 1e5}) EXPECT_LE(rel(t2_from_linewidth(linewidth_from_t2(t2)), t2), 1e-12);
    EXPECT_THROW(t2_from_linewidth(0.0), ParameterError);
    EXPECT_THROW(t2_from_linewidth(-0.3), ParameterError);
    EXPECT_THROW(linewidth_from_t2(0.0), ParameterError);
}

TEST(extra_photon_probability, gives_configured_hbt_ratio) {
    for (double r : {0.0, 0.01, 0.07, 0.09, 0.3, 0.5}) {
        const double p = extra_photon_probability(r);
        // The bisection oracle is flat at r = 1/2 (double root), hence the looser bound there.
        EXPECT_NEAR(p, oracle::extra_probability(r), r == 0.5 ? 1e-7 : 1e-12);
        EXPECT_NEAR(2.0 * p / ((1.0 + p) * (1.0 + p)), r, 1e-14);
    }
    EXPECT_THROW(extra_photon_probability(0.51), ParameterError);
}

TEST(center_peak_density, complete_interference_for_identical_ideal_emitters) {
    const EmitterParams e = emitter(700.0, 1400.0);
    EXPECT_NEAR(center_peak_density(0.0, e, e, setup_with(Polarization::parallel)), 0.0, 1e-18);
}

TEST(center_peak_density, orthogonal_is_strictly_positive) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto a = oracle::random_emitter(rng), b = oracle::random_emitter(rng);
        EXPECT_GT(center_peak_density(0.0, a, b, setup_with(Polarization::orthogonal)), 0.0);
    }
}

TEST(center_peak_density, matches_emission_time_quadrature_at_paper_parameters) {
    const SetupParams par = setup_with(Polarization::parallel);
    const SetupParams perp = setup_with(Polarization::orthogonal);
    for (double tau = -3000.0; tau <= 3000.0; tau += 50.0) {
        const double ref_perp = oracle::center_density(tau, kDot1, kDot2, 1.0, false);
        const double ref_par = oracle::center_density(tau, kDot1, kDot2, 1.0, true);
        const double c_perp = center_peak_density(tau, kDot1, kDot2, perp);
        const double c_par = center_peak_density(tau, kDot1, kDot2, par);
        EXPECT_LE(rel(c_perp, ref_perp), 1e-6) << tau;
        EXPECT_LE(rel(c_par / c_perp, ref_par / ref_perp), 1e-6) << tau;
    }
}

TEST(center_peak_density, matches_quadrature_with_residuals_detuning_and_efficiency) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        auto a = oracle::random_emitter(rng, true), b = oracle::random_emitter(rng, true);
        a.detuning_rad_per_ps = 0.004 * (u(rng) - 0.5);
        const double m = u(rng);
        SetupParams s = setup_with(Polarization::parallel, m);
        for (double tau : {-1500.0, -200.0, 0.0, 35.0, 800.0}) {
            const double ref = oracle::center_density(tau, a, b, m, true);
            EXPECT_NEAR(center_peak_density(tau, a, b, s), ref, 1e-6 * oracle::center_density(tau, a, b, m, false));
        }
    }
}

TEST(center_peak_density, symmetric_and_parallel_bounded_by_orthogonal) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const auto a = oracle::random_emitter(rng, i % 2 == 0), b = oracle::random_emitter(rng, i % 3 == 0);
        const SetupParams par = setup_with(Polarization::parallel, u(rng));
        const SetupParams perp = setup_with(Polarization::orthogonal);
        for (double tau = 0.0; tau <= 6000.0; tau += 7.0) {
            const double cp = center_peak_density(tau, a, b, par);
            const double co = center_peak_density(tau, a, b, perp);
            EXPECT_EQ(cp, center_peak_density(-tau, a, b, par));
            EXPECT_EQ(co, center_peak_density(-tau, a, b, perp));
            EXPECT_GE(cp, 0.0);
            EXPECT_LE(cp, co);
        }
    }
}

TEST(center_peak_density, dip_half_width_tracks_coherence_rates) {
    // The dip (orthogonal minus parallel) falls to half depth at ln2/(1/t2a + 1/t2b).
    const SetupParams par = setup_with(Polarization::parallel);
    const SetupParams perp = setup_with(Polarization::orthogonal);
    for (auto [t2a, t2b] : {std::pair{580.0, 390.0}, std::pair{1000.0, 1500.0}}) {
        const EmitterParams a = emitter(800.0, t2a), b = emitter(900.0, t2b);
        auto dip = [&](double t) {
            return center_peak_density(t, a, b, perp) - center_peak_density(t, a, b, par);
        };
        double lo = 0.0, hi = 5000.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (dip(mid) > 0.5 * dip(0.0) ? lo : hi) = mid;
        }
        EXPECT_NEAR(lo, std::log(2.0) / (1.0 / t2a + 1.0 / t2b), 1e-6);
    }
}

TEST(center_peak_density, orthogonal_width_scales_with_lifetimes) {
    auto fwhm = [](const EmitterParams &a, const EmitterParams &b) {
        const SetupParams s = setup_with(Polarization::orthogonal);
        const double peak = center_peak_density(0.0, a, b, s);
        double lo = 0.0, hi = 1e5;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (center_peak_density(mid, a, b, s) > 0.5 * peak ? lo : hi) = mid;
        }
        return 2.0 * lo;
    };
    const double w1 = fwhm(emitter(610.0, 580.0), emitter(950.0, 390.0));
    const double w2 = fwhm(emitter(1220.0, 580.0), emitter(1900.0, 390.0));
    EXPECT_NEAR(w2 / w1, 2.0, 1e-9);
}

TEST(side_peak_density, matches_pair_enumeration_oracle) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
        const auto a = oracle::random_emitter(rng, true), b = oracle::random_emitter(rng, true);
        for (double tau : {-2000.0, -10.0, 0.0, 10.0, 700.0}) {
            EXPECT_LE(rel(side_peak_density(tau, a, b, SetupParams{}), oracle::side_density(tau, a, b)), 1e-6);
        }
    }
}

TEST(side_peak_density, area_is_twice_orthogonal_center_area_for_equal_emitters) {
    const EmitterParams e = emitter(610.0, 580.0);
    const SetupParams perp = setup_with(Polarization::orthogonal);
    const double side = oracle::full_line([&](double t) { return side_peak_density(t, e, e, perp); });
    const double center = oracle::full_line([&](double t) { return center_peak_density(t, e, e, perp); });
    EXPECT_NEAR(center / side, 0.5, 1e-9);
    // Unequal lifetimes, equal efficiencies: routing alone still gives 1/2.
    const double side2 = oracle::full_line([&](double t) { return side_peak_density(t, kDot1, kDot2, perp); });
    const double center2 = oracle::full_line([&](double t) { return center_peak_density(t, kDot1, kDot2, perp); });
    EXPECT_NEAR(center2 / side2, 0.5, 1e-9);
}

TEST(side_peak_density, zero_efficiency_gives_zero) {
    EmitterParams a = kDot1, b = kDot2;
    a.efficiency = b.efficiency = 0.0;
    for (double tau : {-500.0, 0.0, 500.0}) EXPECT_EQ(side_peak_density(tau, a, b, SetupParams{}), 0.0);
}

TEST(side_peak_density, single_pairing_asymmetric_total_symmetric) {
    EXPECT_NE(envelope_cross_correlation(300.0, kDot1, kDot2), envelope_cross_correlation(-300.0, kDot1, kDot2));
    EXPECT_DOUBLE_EQ(envelope_cross_correlation(300.0, kDot1, kDot2), envelope_cross_correlation(-300.0, kDot2, kDot1));
    for (double tau : {1.0, 300.0, 4000.0}) {
        EXPECT_DOUBLE_EQ(side_peak_density(tau, kDot1, kDot2, SetupParams{}),
                         side_peak_density(-tau, kDot1, kDot2, SetupParams{}));
    }
}

TEST(background_density, uniform_offset_relative_to_side_level) {
    SetupParams s;
    s.background_rate = 0.2;
    const double bg = background_density(kDot1, kDot2, s);
    // Side level of unit-efficiency single photons: (1 + 1)^2 / 4 = 1 per pulse.
    EXPECT_NEAR(bg * s.rep_period_ps, 0.2, 1e-15);
    EXPECT_NEAR(side_peak_density(1e5, kDot1, kDot2, s), bg, 1e-18);
    EXPECT_NEAR(center_peak_density(1e5, kDot1, kDot2, s), bg, 1e-18);
}

TEST(full_correlation, zero_efficiency_is_zero_curve) {
    EmitterParams a = kDot1, b = kDot2;
    a.efficiency = b.efficiency = 0.0;
    const auto c = full_correlation(TauGrid{1.5 * 13140.0, 10.0}, a, b, SetupParams{}, 1);
    for (double v : c.density) EXPECT_EQ(v, 0.0);
}

TEST(full_correlation, orthogonal_center_area_is_half_of_side_area) {
    const SetupParams perp = setup_with(Polarization::orthogonal);
    const auto c = full_correlation(TauGrid{2.5 * 13140.0, 4.0}, kDot1, kDot2, perp, 2);
    const PeakAreas a = curve_peak_areas(c, 13140.0, 13140.0);
    EXPECT_NEAR(a.center.value / a.side_mean.value, 0.5, 1e-3);
    ASSERT_EQ(a.side.size(), 4u);
}

TEST(full_correlation, polarizations_differ_only_in_center_window) {
    const auto perp = full_correlation(TauGrid{2.5 * 13140.0, 4.0}, kDot1, kDot2, setup_with(Polarization::orthogonal), 2);
    const auto par = full_correlation(TauGrid{2.5 * 13140.0, 4.0}, kDot1, kDot2, setup_with(Polarization::parallel), 2);
    ASSERT_EQ(perp.tau_ps, par.tau_ps);
    const double peak = *std::max_element(perp.density.begin(), perp.density.end());
    for (size_t i = 0; i < perp.tau_ps.size(); ++i) {
        // Beyond half a period the interference term is below e^-28 of the peak.
        if (std::abs(perp.tau_ps[i]) > 6570.0) EXPECT_NEAR(par.density[i], perp.density[i], 1e-11 * peak);
    }
    EXPECT_EQ(perp.label, Polarization::orthogonal);
    EXPECT_EQ(par.label, Polarization::parallel);
}

TEST(full_correlation, grid_preconditions) {
    EXPECT_THROW(full_correlation(TauGrid{20000.0, 40.0}, kDot1, kDot2, SetupParams{}, 1), ParameterError);
    EXPECT_NO_THROW(full_correlation(TauGrid{20000.0, 39.0}, kDot1, kDot2, SetupParams{}, 1));
    EXPECT_THROW(full_correlation(TauGrid{19000.0, 4.0}, kDot1, kDot2, SetupParams{}, 1), ParameterError);
    EXPECT_THROW(full_correlation(TauGrid{20000.0, 4.0}, kDot1, kDot2, SetupParams{}, -1), ParameterError);
}

TEST(convolve_with_irf, delta_is_identity) {
    const auto c = full_correlation(TauGrid{1.5 * 13140.0, 4.0}, kDot1, kDot2, SetupParams{}, 1);
    const auto d = convolve_with_irf(c, DetectorParams{});
    EXPECT_EQ(c.density, d.density);
}

TEST(convolve_with_irf, preserves_area_and_symmetry) {
    SetupParams s;
    s.background_rate = 0.1;
    const auto c = full_correlation(TauGrid{1.5 * 13140.0, 4.0}, kDot1, kDot2, s, 1);
    for (auto shape : {IrfShape::gaussian, IrfShape::two_sided_exponential}) {
        const auto d = convolve_with_irf(c, DetectorParams{640.0, shape, 0.0});
        EXPECT_LE(rel(d.area(), c.area()), 1e-4);
        const PeakAreas before = curve_peak_areas(c, 13140.0, 13140.0);
        const PeakAreas after = curve_peak_areas(d, 13140.0, 13140.0);
        // The exponential-tailed response carries tail mass across the +-T/2 window edge
        // (about 1.7e-4 of the centre area here), so the window bound is pinned for the Gaussian.
        if (shape == IrfShape::gaussian) EXPECT_LE(rel(after.center.value, before.center.value), 1e-4);
        const size_t n = d.density.size();
        for (size_t i = 0; i < n / 2; ++i) EXPECT_NEAR(d.density[i], d.density[n - 1 - i], 1e-13 * d.density[i]);
    }
}

TEST(convolve_with_irf, fills_the_dip_but_not_the_area) {
    const auto g = TauGrid{1.5 * 13140.0, 4.0};
    const auto perp = full_correlation(g, kDot1, kDot2, setup_with(Polarization::orthogonal), 1);
    const auto par = full_correlation(g, kDot1, kDot2, setup_with(Polarization::parallel), 1);
    const DetectorParams d{640.0, IrfShape::gaussian, 0.0};
    const auto perp_c = convolve_with_irf(perp, d);
    const auto par_c = convolve_with_irf(par, d);
    const size_t mid = par.tau_ps.size() / 2;
    ASSERT_EQ(par.tau_ps[mid], 0.0);
    EXPECT_LT(par.density[mid] / perp.density[mid], 0.3);
    EXPECT_GT(par_c.density[mid] / perp_c.density[mid], par.density[mid] / perp.density[mid] + 0.2);
    EXPECT_LT(par_c.density[mid], perp_c.density[mid]);
    const double pc0 = coalescence_probability(curve_peak_areas(perp, 13140.0, 13140.0), curve_peak_areas(par, 13140.0, 13140.0)).value;
    const double pc1 =
        coalescence_probability(curve_peak_areas(perp_c, 13140.0, 13140.0), curve_peak_areas(par_c, 13140.0, 13140.0)).value;
    EXPECT_NEAR(pc0, pc1, 1e-3);
}

TEST(convolve_with_irf, heavy_tailed_response_keeps_coalescence) {
    const auto g = TauGrid{1.5 * 13140.0, 4.0};
    const auto perp = full_correlation(g, kDot1, kDot2, setup_with(Polarization::orthogonal), 1);
    const auto par = full_correlation(g, kDot1, kDot2, setup_with(Polarization::parallel), 1);
    const DetectorParams d{640.0, IrfShape::two_sided_exponential, 0.0};
    const double pc0 = coalescence_probability(curve_peak_areas(perp, 13140.0, 13140.0), curve_peak_areas(par, 13140.0, 13140.0)).value;
    const double pc1 = coalescence_probability(curve_peak_areas(convolve_with_irf(perp, d), 13140.0, 13140.0),
                                               curve_peak_areas(convolve_with_irf(par, d), 13140.0, 13140.0))
                           .value;
    EXPECT_NEAR(pc0, pc1, 1e-3);
}

TEST(convolve_with_irf, rejects_undersampled_kernel) {
    const auto c = full_correlation(TauGrid{1.5 * 13140.0, 39.0}, kDot1, kDot2, SetupParams{}, 1);
    EXPECT_THROW(convolve_with_irf(c, DetectorParams{300.0, IrfShape::gaussian, 0.0}), ParameterError);
    EXPECT_NO_THROW(convolve_with_irf(c, DetectorParams{312.0, IrfShape::gaussian, 0.0}));
}

TEST(coalescence_probability, examples) {
    const PeakAreas a{{1000.0, std::sqrt(1000.0)}, {}, {}, {}, 0.0, 0.0};
    EXPECT_EQ(coalescence_probability(a, a).value, 0.0);
    const PeakAreas zero{{0.0, 0.0}, {}, {}, {}, 0.0, 0.0};
    EXPECT_EQ(coalescence_probability(a, zero).value, 1.0);
    EXPECT_THROW(coalescence_probability(zero, a), ParameterError);
    const PeakAreas more{{1100.0, std::sqrt(1100.0)}, {}, {}, {}, 0.0, 0.0};
    EXPECT_LT(coalescence_probability(a, more).value, 0.0);
}

TEST(coalescence_probability, published_areas) {
    // Raw orthogonal/parallel center areas consistent with Pc = 18.1 +- 0.4 % under Poisson errors.
    const PeakAreas perp{{93000.0, std::sqrt(93000.0)}, {}, {}, {}, 0.0, 0.0};
    const PeakAreas par{{76167.0, std::sqrt(76167.0)}, {}, {}, {}, 0.0, 0.0};
    const Measured pc = coalescence_probability(perp, par);
    EXPECT_NEAR(pc.value, 0.181, 5e-4);
    EXPECT_NEAR(pc.sigma, 0.004, 1e-4);
    // First-order propagation, written out.
    const double expect = std::sqrt(76167.0 * 76167.0 / std::pow(93000.0, 3) + 76167.0 / (93000.0 * 93000.0));
    EXPECT_NEAR(pc.sigma, expect, 1e-15);
}

TEST(postselected_coalescence, ideal_emitters_give_unity) {
    const EmitterParams e = emitter(700.0, 1400.0);
    const auto g = TauGrid{1.5 * 13140.0, 4.0};
    const auto perp = full_correlation(g, e, e, setup_with(Polarization::orthogonal), 1);
    const auto par = full_correlation(g, e, e, setup_with(Polarization::parallel), 1);
    // Only the e^-(T/t1) tails of the neighbouring peaks remain at zero delay.
    EXPECT_NEAR(postselected_coalescence(perp, par, 4.0), 1.0, 1e-7);
    EXPECT_NEAR(postselected_coalescence(perp, par, 12.0), 1.0, 1e-3);
}

TEST(postselected_coalescence, one_bin_is_point_evaluation) {
    const auto g = TauGrid{1.5 * 13140.0, 4.0};
    const auto perp = full_correlation(g, kDot1, kDot2, setup_with(Polarization::orthogonal), 1);
    const auto par = full_correlation(g, kDot1, kDot2, setup_with(Polarization::parallel), 1);
    const size_t mid = perp.tau_ps.size() / 2;
    ASSERT_EQ(perp.tau_ps[mid], 0.0);
    EXPECT_EQ(postselected_coalescence(perp, par, 4.0), (perp.density[mid] - par.density[mid]) / perp.density[mid]);
    const double at0 = 1.0 - center_peak_density(0.0, kDot1, kDot2, setup_with(Polarization::parallel)) /
                                 center_peak_density(0.0, kDot1, kDot2, setup_with(Polarization::orthogonal));
    EXPECT_NEAR(postselected_coalescence(perp, par, 4.0), at0, 1e-5);
}

TEST(postselected_coalescence, errors) {
    const auto g = TauGrid{1.5 * 13140.0, 4.0};
    const auto perp = full_correlation(g, kDot1, kDot2, setup_with(Polarization::orthogonal), 1);
    const auto par = full_correlation(g, kDot1, kDot2, setup_with(Polarization::parallel), 1);
    EXPECT_THROW(postselected_coalescence(perp, par, 2.0), ParameterError);
    const auto other = full_correlation(TauGrid{1.5 * 13140.0, 5.0}, kDot1, kDot2, SetupParams{}, 1);
    EXPECT_THROW(postselected_coalescence(perp, other, 10.0), ParameterError);
    CorrelationCurve dark = perp;
    std::fill(dark.density.begin(), dark.density.end(), 0.0);
    EXPECT_THROW(postselected_coalescence(dark, dark, 40.0), ParameterError);
}

TEST(coincidence_ratio, examples) {
    PeakAreas a;
    a.side = {{2000.0, std::sqrt(2000.0)}};
    a.side_index = {1};
    a.side_mean = {2000.0, std::sqrt(2000.0)};
    a.center = {1000.0, std::sqrt(1000.0)};
    EXPECT_EQ(coincidence_ratio(a).value, 0.5);
    a.center = {0.0, 0.0};
    EXPECT_EQ(coincidence_ratio(a).value, 0.0);
    a.side.clear();
    EXPECT_THROW(coincidence_ratio(a), ParameterError);
}

TEST(coincidence_ratio, published_ratio) {
    // A_par from Pc; B over ten side peaks chosen so that A_par / B = 0.481.
    const double a_par = 76167.0;
    const double b = a_par / 0.481;
    PeakAreas p;
    p.center = {a_par, std::sqrt(a_par)};
    for (int k = 0; k < 10; ++k) {
        p.side.push_back({b, std::sqrt(b)});
        p.side_index.push_back(k < 5 ? k - 5 : k - 4);
    }
    p.side_mean = {b, std::sqrt(10.0 * b) / 10.0};
    const Measured r = coincidence_ratio(p);
    EXPECT_NEAR(r.value, 0.481, 1e-12);
    EXPECT_NEAR(r.sigma, 0.002, 5e-4);
}

TEST(max_coalescence, closed_form_limits) {
    const EmitterParams e = emitter(700.0, 1400.0);
    EXPECT_NEAR(max_coalescence(e, e), 1.0, 1e-15);
    const double k = 1.0 / (610.0 + 950.0);
    const double g = 1.0 / 580.0 + 1.0 / 390.0;
    EXPECT_NEAR(max_coalescence(kDot1, kDot2), 2.0 * k / g, 1e-15);
    EXPECT_GE(max_coalescence(kDot1, kDot2), 0.28);
    EXPECT_LE(max_coalescence(kDot1, kDot2), 0.31);
    EmitterParams far = kDot1;
    far.detuning_rad_per_ps = 1e6;
    EXPECT_LT(max_coalescence(far, kDot2), 1e-12);
}

TEST(max_coalescence, equals_integrated_center_peaks) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        auto a = oracle::random_emitter(rng), b = oracle::random_emitter(rng);
        a.efficiency = b.efficiency = 1.0;
        a.detuning_rad_per_ps = 0.003 * u(rng);
        const double perp = oracle::full_line([&](double t) {
            return center_peak_density(t, a, b, setup_with(Polarization::orthogonal));
        });
        const double par = oracle::full_line([&](double t) {
            return center_peak_density(t, a, b, setup_with(Polarization::parallel));
        });
        EXPECT_LE(rel(max_coalescence(a, b), (perp - par) / perp), 1e-6);
    }
}

TEST(analytic_areas, match_integrated_curves) {
    auto [a, b] = std::pair{kDot1, kDot2};
    a.multiphoton_residual = 0.09;
    b.multiphoton_residual = 0.07;
    a.efficiency = 0.8;
    SetupParams s = setup_with(Polarization::orthogonal, 0.9);
    const AnalyticAreas areas = analytic_areas(a, b, s);
    const double perp = oracle::full_line([&](double t) { return oracle::center_density(t, a, b, 0.9, false); });
    const double par = oracle::full_line([&](double t) { return oracle::center_density(t, a, b, 0.9, true); });
    const double side = oracle::full_line([&](double t) { return oracle::side_density(t, a, b); });
    EXPECT_LE(rel(areas.center_perp, perp), 1e-6);
    EXPECT_LE(rel(areas.center_par, par), 1e-6);
    EXPECT_LE(rel(areas.side, side), 1e-6);
}

TEST(calibrate_overlap_and_background, reproduces_targets) {
    auto [a, b] = std::pair{kDot1, kDot2};
    a.multiphoton_residual = 0.09;
    b.multiphoton_residual = 0.07;
    const Calibration cal = calibrate_overlap_and_background(a, b, SetupParams{}, 0.181, 0.481);
    SetupParams s;
    s.mode_overlap = cal.mode_overlap;
    s.background_rate = cal.background_rate;
    const AnalyticAreas ar = analytic_areas(a, b, s);
    EXPECT_NEAR((ar.center_perp - ar.center_par) / ar.center_perp, 0.181, 1e-12);
    EXPECT_NEAR(ar.center_par / ar.side, 0.481, 1e-12);
    EXPECT_GT(cal.mode_overlap, 0.0);
    EXPECT_LE(cal.mode_overlap, 1.0);
    EXPECT_GT(cal.background_rate, 0.0);
    // Coalescence above the ideal bound needs an overlap above one.
    EXPECT_THROW(calibrate_overlap_and_background(a, b, SetupParams{}, 0.35, 0.3), ParameterError);
}

TEST(noise_rate_for_background, accidentals_match_requested_background) {
    SetupParams s;
    s.background_rate = 0.115;
    const double d = noise_rate_for_background(kDot1, kDot2, s);
    const double n = 2.0;  // mean photons per pulse, both channels together
    const double T = s.rep_period_ps;
    // Per channel: signal rate n/2 per pulse + d T noise; accidental (noise x anything) area per period.
    const double accidental = 2.0 * (n / 2.0) * d * T + d * T * d * T;
    EXPECT_NEAR(accidental, 0.115 * 1.0, 1e-12);
    EXPECT_EQ(noise_rate_for_background(kDot1, kDot2, SetupParams{}), 0.0);
}

TEST(with_dark_counts, adds_dark_rate_accidentals) {
    SetupParams s;
    EXPECT_EQ(with_dark_counts(s, kDot1, kDot2, DetectorParams{}).background_rate, 0.0);
    DetectorParams d;
    d.dark_rate_per_ps = 1e-6;
    const SetupParams out = with_dark_counts(s, kDot1, kDot2, d);
    const double T = s.rep_period_ps;
    EXPECT_NEAR(out.background_rate, (2.0 * 1.0 * 1e-6 * T + 1e-12 * T * T), 1e-12);
    EXPECT_NEAR(noise_rate_for_background(kDot1, kDot2, out), 1e-6, 1e-15);
}
