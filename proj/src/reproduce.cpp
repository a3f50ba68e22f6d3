#include "hom/reproduce.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "hom/correlation.hpp"
#include "hom/fitting.hpp"
#include "hom/montecarlo.hpp"

namespace hom::repro {

namespace {

constexpr std::int64_t kBinWidthPs = 256;
constexpr std::int64_t kMaxTauPs = 72270; // 5.5 periods, five complete side peaks each way
/// Postselection window of the analytic rows: effectively the zero-delay value.
constexpr double kAnalyticPostWindowPs = 16.0;
constexpr double kCurveSpacingPs = 4.0;

Row row(std::string q, Basis b, double paper, double paper_sigma, double computed, double computed_sigma, double lo,
        double hi, std::string note = "") {
    return {std::move(q), b, paper, paper_sigma, computed, computed_sigma, lo, hi, std::move(note)};
}

CorrelationCurve curve(const EmitterParams &e1, const EmitterParams &e2, SetupParams setup, Polarization pol) {
    setup.polarization = pol;
    const TauGrid grid{1.5 * setup.rep_period_ps, kCurveSpacingPs};
    return full_correlation(grid, e1, e2, setup, 1);
}

} // namespace

EmitterParams dot1() {
    EmitterParams e;
    e.t1_ps = 610.0;
    e.t2_ps = t2_from_linewidth(kLinewidth1Ghz);
    return e;
}

EmitterParams dot2() {
    EmitterParams e;
    e.t1_ps = 950.0;
    e.t2_ps = t2_from_linewidth(kLinewidth2Ghz);
    return e;
}

EmitterParams dot2_with_dark_state() {
    EmitterParams e = dot2();
    e.dark_state = DarkState{kDarkLifetime2Ps, kDarkFraction2};
    return e;
}

DetectorParams apd() {
    DetectorParams d;
    d.irf_fwhm_ps = kApdFwhmPs;
    d.irf_shape = IrfShape::gaussian;
    return d;
}

SetupParams interferometer(double mode_overlap) {
    SetupParams s;
    s.mode_overlap = mode_overlap;
    s.rep_period_ps = kRepPeriodPs;
    return s;
}

std::pair<EmitterParams, EmitterParams> dots_with_residuals() {
    EmitterParams a = dot1();
    EmitterParams b = dot2();
    a.multiphoton_residual = 0.09;
    b.multiphoton_residual = 0.07;
    return {a, b};
}

RunConfig paper_config() {
    RunConfig c;
    const auto [a, b] = dots_with_residuals();
    c.emitters = {a, b};
    c.setup = interferometer(1.0);
    c.detector = apd();
    c.simulation.n_pulses = 10'000'000;
    c.analysis.bin_width_ps = kBinWidthPs;
    c.analysis.window_ps = kRepPeriodPs;
    c.analysis.post_window_ps = static_cast<double>(kBinWidthPs);
    c.analysis.max_tau_ps = kMaxTauPs;
    return c;
}

std::string to_string(Basis b) {
    switch (b) {
    case Basis::predicted:
        return "predicted";
    case Basis::calibrated:
        return "calibrated";
    case Basis::derived:
        break;
    }
    return "derived";
}

double postselected_analytic(const SetupParams &setup, const DetectorParams &d, double post_window) {
    const auto [a, b] = dots_with_residuals();
    CorrelationCurve perp = curve(a, b, setup, Polarization::orthogonal);
    CorrelationCurve par = curve(a, b, setup, Polarization::parallel);
    perp = convolve_with_irf(perp, d);
    par = convolve_with_irf(par, d);
    return postselected_coalescence(perp, par, post_window);
}

AreaCheck coalescence_with_and_without_irf() {
    const EmitterParams a = dot1();
    const EmitterParams b = dot2();
    const SetupParams s = interferometer(1.0);
    const CorrelationCurve perp = curve(a, b, s, Polarization::orthogonal);
    const CorrelationCurve par = curve(a, b, s, Polarization::parallel);
    const DetectorParams d = apd();
    AreaCheck out;
    out.unconvolved = coalescence_probability(curve_peak_areas(perp, s.rep_period_ps, s.rep_period_ps),
                                              curve_peak_areas(par, s.rep_period_ps, s.rep_period_ps))
                          .value;
    out.convolved = coalescence_probability(curve_peak_areas(convolve_with_irf(perp, d), s.rep_period_ps, s.rep_period_ps),
                                            curve_peak_areas(convolve_with_irf(par, d), s.rep_period_ps, s.rep_period_ps))
                        .value;
    return out;
}

SampledCurve synthetic_spectrum(double fwhm, double instrument, std::uint64_t seed) {
    constexpr int kPoints = 161;
    constexpr double kHalfSpanGhz = 4.0;
    constexpr double kPeakCounts = 5000.0;
    constexpr double kOffset = 20.0;
    const double total = fwhm + instrument;
    const double hw = 0.5 * total;
    std::mt19937_64 rng(seed);
    SampledCurve s;
    std::vector<double> err;
    for (int i = 0; i < kPoints; ++i) {
        const double x = -kHalfSpanGhz + 2.0 * kHalfSpanGhz * i / (kPoints - 1);
        const double mean = kOffset + kPeakCounts * hw * hw / (x * x + hw * hw);
        const double y = static_cast<double>(std::poisson_distribution<std::uint64_t>(mean)(rng));
        s.x.push_back(x);
        s.y.push_back(y);
        err.push_back(std::sqrt(std::max(y, 1.0)));
    }
    s.y_err = std::move(err);
    return s;
}

SampledCurve synthetic_decay(const EmitterParams &e, const DetectorParams &d, std::uint64_t seed) {
    return mc::generate_decay_curve(e, d, 1'000'000, 32.0, -3000.0, kRepPeriodPs - 3000.0, seed, 2.0);
}

HomRun run_hom(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup, const DetectorParams &d,
               std::uint64_t n_pulses, std::uint64_t seed, unsigned workers) {
    SetupParams perp_setup = setup;
    perp_setup.polarization = Polarization::orthogonal;
    SetupParams par_setup = setup;
    par_setup.polarization = Polarization::parallel;
    const mc::SimulationResult rp = mc::generate_streams(n_pulses, e1, e2, perp_setup, d, seed, workers);
    const CorrelationHistogram hp = correlate(rp.d3, rp.d4, kBinWidthPs, kMaxTauPs);
    const mc::SimulationResult rq = mc::generate_streams(n_pulses, e1, e2, par_setup, d, seed + 1, workers);
    const CorrelationHistogram hq = correlate(rq.d3, rq.d4, kBinWidthPs, kMaxTauPs);
    HomRun out;
    out.perp = integrate_peaks(hp, setup.rep_period_ps, setup.rep_period_ps);
    out.par = integrate_peaks(hq, setup.rep_period_ps, setup.rep_period_ps);
    out.metrics = metrics(out.perp, out.par, hp, hq, static_cast<double>(kBinWidthPs));
    return out;
}

Measured run_hbt(const EmitterParams &e, const DetectorParams &d, std::uint64_t n_pulses, std::uint64_t seed,
                 unsigned workers) {
    EmitterParams off = e;
    off.efficiency = 0.0;
    off.multiphoton_residual = 0.0;
    SetupParams s = interferometer(1.0);
    s.polarization = Polarization::orthogonal;
    const mc::SimulationResult r = mc::generate_streams(n_pulses, e, off, s, d, seed, workers);
    return hbt_purity(correlate(r.d3, r.d4, kBinWidthPs, kMaxTauPs), s.rep_period_ps, s.rep_period_ps);
}

bool ReproductionReport::all_pass() const {
    for (const Row &r : rows) {
        if (!r.pass()) return false;
    }
    return true;
}

std::string ReproductionReport::to_json() const {
    nlohmann::json j;
    j["all_pass"] = all_pass();
    j["seed"] = options.seed;
    j["n_pulses"] = options.n_pulses;
    j["hbt_pulses"] = options.hbt_pulses;
    j["calibrated"] = {{"mode_overlap", calibrated_mode_overlap}, {"background_rate", calibrated_background_rate}};
    j["config"] = nlohmann::json::parse(serialize_config(config));
    j["rows"] = nlohmann::json::array();
    for (const Row &r : rows) {
        j["rows"].push_back({{"quantity", r.quantity},
                             {"basis", to_string(r.basis)},
                             {"paper_value", r.paper_value},
                             {"paper_sigma", r.paper_sigma},
                             {"computed", r.computed},
                             {"computed_sigma", r.computed_sigma},
                             {"lower", r.lower},
                             {"upper", r.upper},
                             {"pass", r.pass()},
                             {"note", r.note}});
    }
    return j.dump(2) + "\n";
}

std::string ReproductionReport::to_table() const {
    std::string out = fmt::format("{:<34} {:<10} {:>16} {:>22} {:>22}  {}\n", "quantity", "basis", "paper",
                                  "computed", "tolerance", "result");
    for (const Row &r : rows) {
        out += fmt::format("{:<34} {:<10} {:>16} {:>22} {:>22}  {}\n", r.quantity, to_string(r.basis),
                           fmt::format("{:.4g} +- {:.2g}", r.paper_value, r.paper_sigma),
                           fmt::format("{:.5g} +- {:.2g}", r.computed, r.computed_sigma),
                           fmt::format("[{:.4g}, {:.4g}]", r.lower, r.upper), r.pass() ? "PASS" : "FAIL");
    }
    out += fmt::format("calibrated mode_overlap = {:.5f}, background_rate = {:.5f}; seed {}, {} pulses\n",
                       calibrated_mode_overlap, calibrated_background_rate, options.seed, options.n_pulses);
    return out;
}

ReproductionReport reproduce_paper(const ReproduceOptions &opt) {
    ReproductionReport rep;
    rep.options = opt;
    rep.config = paper_config();
    rep.config.simulation.n_pulses = opt.n_pulses;
    rep.config.simulation.seed = opt.seed;
    rep.config.simulation.workers = opt.workers;
    auto &rows = rep.rows;
    const DetectorParams d = apd();
    const auto [r1, r2] = dots_with_residuals();

    rows.push_back(row("max coalescence", Basis::predicted, 0.29, 0.0, max_coalescence(dot1(), dot2()), 0.0, 0.28,
                       0.31));
    const double t2a = t2_from_linewidth(kLinewidth1Ghz);
    const double t2b = t2_from_linewidth(kLinewidth2Ghz);
    rows.push_back(row("T2 dot 1 from linewidth (ps)", Basis::predicted, 580.0, 20.0, t2a, 0.0, 560.0, 600.0));
    rows.push_back(row("T2 dot 2 from linewidth (ps)", Basis::predicted, 390.0, 20.0, t2b, 0.0, 370.0, 410.0));

    const fit::FitResult l1 =
        fit::fit_lorentzian(synthetic_spectrum(kLinewidth1Ghz, kSpectrometerFwhmGhz, opt.seed + 11), kSpectrometerFwhmGhz);
    const fit::FitResult l2 =
        fit::fit_lorentzian(synthetic_spectrum(kLinewidth2Ghz, kSpectrometerFwhmGhz, opt.seed + 12), kSpectrometerFwhmGhz);
    rows.push_back(row("linewidth fit dot 1 (GHz)", Basis::derived, 0.55, 0.02, l1.value("fwhm_ghz"),
                       l1.sigma("fwhm_ghz"), 0.53, 0.57, "synthetic spectrum, 0.15 GHz spectrometer"));
    rows.push_back(row("linewidth fit dot 2 (GHz)", Basis::derived, 0.81, 0.05, l2.value("fwhm_ghz"),
                       l2.sigma("fwhm_ghz"), 0.76, 0.86, "synthetic spectrum, 0.15 GHz spectrometer"));

    const fit::FitResult f1 = fit::fit_decay(synthetic_decay(dot1(), d, opt.seed + 21), fit::Model::single_exp, d);
    const fit::FitResult f2 =
        fit::fit_decay(synthetic_decay(dot2_with_dark_state(), d, opt.seed + 22), fit::Model::biexp, d);
    rows.push_back(row("T1 fit dot 1 (ps)", Basis::derived, 610.0, 5.0, f1.value("lifetime_ps"),
                       f1.sigma("lifetime_ps"), 600.0, 620.0, "Monte Carlo decay, 640 ps response"));
    rows.push_back(row("T1 fit dot 2 (ps)", Basis::derived, 950.0, 5.0, f2.value("fast_lifetime_ps"),
                       f2.sigma("fast_lifetime_ps"), 935.0, 965.0, "Monte Carlo decay with dark state"));
    rows.push_back(row("dark state time dot 2 (ps)", Basis::derived, 4000.0, 500.0, f2.value("slow_lifetime_ps"),
                       f2.sigma("slow_lifetime_ps"), 3500.0, 4500.0, "dark fraction 0.1 assumed"));

    const Measured h1 = run_hbt(r1, d, opt.hbt_pulses, opt.seed + 31, opt.workers);
    const Measured h2 = run_hbt(r2, d, opt.hbt_pulses, opt.seed + 32, opt.workers);
    rows.push_back(row("HBT residual dot 1", Basis::derived, 0.09, 0.0, h1.value, h1.sigma, 0.08, 0.10));
    rows.push_back(row("HBT residual dot 2", Basis::derived, 0.07, 0.0, h2.value, h2.sigma, 0.06, 0.08));

    const AreaCheck ac = coalescence_with_and_without_irf();
    rows.push_back(row("coalescence change from response", Basis::predicted, 0.0, 0.0,
                       std::abs(ac.convolved - ac.unconvolved), 0.0, 0.0, 0.001));

    DetectorParams ideal;
    rows.push_back(row("postselected coalescence, ideal", Basis::predicted, 0.96, 0.04,
                       postselected_analytic(interferometer(0.95), ideal, kAnalyticPostWindowPs), 0.0, 0.90, 1.00,
                       "mode overlap 0.95, residuals 9%/7%"));

    const Calibration cal = calibrate_overlap_and_background(r1, r2, interferometer(1.0), kMeasuredPc, kMeasuredRatio);
    rep.calibrated_mode_overlap = cal.mode_overlap;
    rep.calibrated_background_rate = cal.background_rate;
    SetupParams cal_setup = interferometer(cal.mode_overlap);
    cal_setup.background_rate = cal.background_rate;
    rows.push_back(row("postselected coalescence, 640 ps", Basis::calibrated, 0.47, 0.06,
                       postselected_analytic(cal_setup, d, kAnalyticPostWindowPs), 0.0, 0.35, 0.55,
                       "overlap and background calibrated to Pc and A_par/B"));

    const HomRun cal_run = run_hom(r1, r2, cal_setup, d, opt.n_pulses, opt.seed + 41, opt.workers);
    const Measured pc = *cal_run.metrics.pc;
    const Measured ratio = *cal_run.metrics.ratio_par_b;
    rows.push_back(row("coalescence probability", Basis::calibrated, kMeasuredPc, 0.004, pc.value, pc.sigma,
                       kMeasuredPc - 0.01, kMeasuredPc + 0.01, "Monte Carlo"));
    rows.push_back(row("A_par/B", Basis::calibrated, kMeasuredRatio, 0.002, ratio.value, ratio.sigma, 0.47,
                       std::nextafter(0.5, 0.0), "Monte Carlo; must stay below 0.5"));

    const HomRun ideal_run = run_hom(dot1(), dot2(), interferometer(1.0), d, opt.n_pulses, opt.seed + 51, opt.workers);
    const Measured perp_ratio = coincidence_ratio(ideal_run.perp);
    rows.push_back(row("A_perp/B, ideal sources", Basis::predicted, 0.5, 0.0, perp_ratio.value, perp_ratio.sigma,
                       0.5 - 3.0 * perp_ratio.sigma, 0.5 + 3.0 * perp_ratio.sigma, "Monte Carlo, no residuals"));
    return rep;
}

} // namespace hom::repro
