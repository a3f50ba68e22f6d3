#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hom/analysis.hpp"
#include "hom/config.hpp"
#include "hom/types.hpp"

/// Built-in parameter sets of the two-dot experiment and the report that
/// compares the pipeline against the published numbers.
namespace hom::repro {

inline constexpr double kLinewidth1Ghz = 0.55;
inline constexpr double kLinewidth2Ghz = 0.81;
inline constexpr double kSpectrometerFwhmGhz = 0.15;
inline constexpr double kApdFwhmPs = 640.0;
inline constexpr double kRepPeriodPs = 13140.0;
inline constexpr double kMeasuredPc = 0.181;
inline constexpr double kMeasuredRatio = 0.481;
/// Not published; assumed share of decays through the dark state of dot 2.
inline constexpr double kDarkFraction2 = 0.1;
inline constexpr double kDarkLifetime2Ps = 4000.0;

/// Prompt-emission parameters (no dark state) used for interference.
EmitterParams dot1();
EmitterParams dot2();
/// Dot 2 including its dark-state slow component, for decay curves.
EmitterParams dot2_with_dark_state();
DetectorParams apd();
/// Interferometer with the given amplitude overlap and no background.
SetupParams interferometer(double mode_overlap = 1.0);
RunConfig paper_config();

enum class Basis { predicted, calibrated, derived };
std::string to_string(Basis b);

struct Row {
    std::string quantity;
    Basis basis = Basis::predicted;
    double paper_value = 0.0;
    double paper_sigma = 0.0;
    double computed = 0.0;
    double computed_sigma = 0.0;
    /// Acceptance interval for `computed`, inclusive.
    double lower = 0.0;
    double upper = 0.0;
    std::string note;

    bool pass() const { return computed >= lower && computed <= upper; }
};

struct ReproduceOptions {
    std::uint64_t n_pulses = 10'000'000;
    std::uint64_t hbt_pulses = 1'000'000;
    std::uint64_t seed = 20100611;
    unsigned workers = 0;
};

struct ReproductionReport {
    std::vector<Row> rows;
    RunConfig config;
    ReproduceOptions options;
    double calibrated_mode_overlap = 0.0;
    double calibrated_background_rate = 0.0;

    bool all_pass() const;
    std::string to_json() const;
    std::string to_table() const;
};

/// Analytic postselected coalescence for the two built-in emitters with the given
/// residual-carrying setup, optionally convolved with the APD response.
double postselected_analytic(const SetupParams &setup, const DetectorParams &d, double post_window_ps);

/// Analytic coalescence from unconvolved and convolved curves (mode overlap 1).
struct AreaCheck {
    double unconvolved = 0.0;
    double convolved = 0.0;
};
AreaCheck coalescence_with_and_without_irf();

/// Two dots with multi-photon residuals as measured.
std::pair<EmitterParams, EmitterParams> dots_with_residuals();

/// Noisy spectrum of a Lorentzian line of the given FWHM seen through the
/// Lorentzian spectrometer response; Poisson counts with sqrt errors.
SampledCurve synthetic_spectrum(double fwhm_ghz, double instrument_fwhm_ghz, std::uint64_t seed);

/// Pulse-synchronous decay histogram over one repetition period.
SampledCurve synthetic_decay(const EmitterParams &e, const DetectorParams &d, std::uint64_t seed);

/// Monte Carlo orthogonal and parallel runs with identical settings and
/// independent seeds, correlated and integrated over full periods.
struct HomRun {
    PeakAreas perp;
    PeakAreas par;
    InterferenceMetrics metrics;
};
HomRun run_hom(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup, const DetectorParams &d,
               std::uint64_t n_pulses, std::uint64_t seed, unsigned workers);

/// HBT run of one emitter (the other switched off).
Measured run_hbt(const EmitterParams &e, const DetectorParams &d, std::uint64_t n_pulses, std::uint64_t seed,
                 unsigned workers);

ReproductionReport reproduce_paper(const ReproduceOptions &opt);

} // namespace hom::repro
