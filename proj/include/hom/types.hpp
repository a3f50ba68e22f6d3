#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hom {

/// Raised when a parameter set violates its invariants. The message names
/// the offending field, e.g. "t2_ps: exceeds 2*t1_ps".
class ParameterError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

enum class Polarization { parallel, orthogonal };
enum class IrfShape { gaussian, two_sided_exponential, delta };

std::string to_string(Polarization p);
std::string to_string(IrfShape s);
Polarization parse_polarization(const std::string &s);
IrfShape parse_irf_shape(const std::string &s);

/// Slow (dark-state mediated) decay channel of a neutral exciton.
struct DarkState {
    double slow_lifetime_ps = 4000.0;
    double slow_fraction = 0.0;

    bool operator==(const DarkState &) const = default;
};

/// One single-photon emitter. Times in ps, frequencies in rad/ps.
struct EmitterParams {
    double t1_ps = 1000.0;
    double t2_ps = 2000.0;
    double detuning_rad_per_ps = 0.0;
    /// Probability that a pulse yields a detected photon.
    double efficiency = 1.0;
    /// The emitter's own HBT center/side area ratio.
    double multiphoton_residual = 0.0;
    std::optional<DarkState> dark_state;

    /// Throws ParameterError. `prefix` is prepended to field names.
    void validate(const std::string &prefix = "") const;

    double decay_rate() const { return 1.0 / t1_ps; }
    double coherence_rate() const { return 1.0 / t2_ps; }

    bool operator==(const EmitterParams &) const = default;
};

struct SetupParams {
    /// Amplitude overlap of the two input modes; interference scales as its square.
    double mode_overlap = 1.0;
    Polarization polarization = Polarization::parallel;
    double rep_period_ps = 13140.0;
    /// Uniform accidental density, in units of (side-peak area) per rep period.
    double background_rate = 0.0;

    void validate(const std::string &prefix = "") const;

    bool operator==(const SetupParams &) const = default;
};

/// Timing response of the detection chain. `irf_fwhm_ps` and `irf_shape`
/// describe the combined response of a start/stop detector pair, i.e. the
/// distribution of the difference of the two detectors' jitters.
struct DetectorParams {
    double irf_fwhm_ps = 0.0;
    IrfShape irf_shape = IrfShape::delta;
    double dark_rate_per_ps = 0.0;

    void validate(const std::string &prefix = "") const;

    bool operator==(const DetectorParams &) const = default;
};

/// A value with its one-sigma uncertainty.
struct Measured {
    double value = 0.0;
    double sigma = 0.0;
};

/// Symmetric uniform delay grid: points k*spacing for |k| <= ceil(half_range/spacing).
struct TauGrid {
    double half_range_ps = 0.0;
    double spacing_ps = 1.0;

    std::vector<double> points() const;
};

/// Coincidence density (per ps, per excitation pulse) on a uniform grid.
struct CorrelationCurve {
    std::vector<double> tau_ps;
    std::vector<double> density;
    Polarization label = Polarization::parallel;

    double spacing() const;
    /// Rectangle-rule integral over the whole grid.
    double area() const;
    void validate() const;
};

/// Integrated peak areas of one correlation measurement.
struct PeakAreas {
    Measured center;
    Measured side_mean;
    std::vector<int> side_index;
    std::vector<Measured> side;
    double rep_period_ps = 0.0;
    double window_ps = 0.0;
};

/// Plain x/y samples: spectra (x in GHz) or decay histograms (x in ps).
struct SampledCurve {
    std::vector<double> x;
    std::vector<double> y;
    std::optional<std::vector<double>> y_err;

    void validate() const;
};

} // namespace hom
