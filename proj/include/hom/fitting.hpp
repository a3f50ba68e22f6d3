#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hom/types.hpp"

namespace hom::fit {

class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Model { lorentzian, single_exp, biexp };
enum class InstrumentShape { lorentzian, gaussian };

std::string to_string(Model m);
Model parse_model(const std::string &s);
InstrumentShape parse_instrument_shape(const std::string &s);
std::string to_string(InstrumentShape s);

struct Parameter {
    std::string name;
    std::string unit;
    double value = 0.0;
    double sigma = 0.0;
};

/// Everything needed to re-evaluate the model a fit was made with.
struct FitContext {
    Model model = Model::lorentzian;
    double instrument_fwhm_ghz = 0.0;
    InstrumentShape instrument = InstrumentShape::lorentzian;
    DetectorParams detector;
    double epoch_ps = 0.0;
};

struct FitResult {
    FitContext context;
    /// Reported parameters. Lorentzian: center_ghz, fwhm_ghz (intrinsic),
    /// area, offset. single_exp: lifetime_ps, amplitude, offset. biexp:
    /// fast_lifetime_ps, slow_lifetime_ps, fast_amplitude, slow_amplitude,
    /// offset, slow_fraction.
    std::vector<Parameter> params;
    double reduced_chi2 = 0.0;
    int iterations = 0;
    /// Biexponential only: one component vanished (below 1e-6 of the total,
    /// the survivor is then reported as the fast one) or lifetimes collapsed.
    bool degenerate = false;

    const Parameter &at(const std::string &name) const;
    double value(const std::string &name) const { return at(name).value; }
    double sigma(const std::string &name) const { return at(name).sigma; }
};

/// Lorentzian line plus offset, seen through an instrument of the given
/// FWHM. Lorentzian instrument widths add to the line width; a Gaussian
/// instrument is convolved numerically (Voigt profile).
FitResult fit_lorentzian(const SampledCurve &s, double instrument_fwhm_ghz,
                         InstrumentShape instrument = InstrumentShape::lorentzian);

/// Pulsed decay (counts per bin) convolved with the single-channel detector
/// response, plus offset. `epoch_ps` is the excitation time on the x axis.
FitResult fit_decay(const SampledCurve &s, Model model, const DetectorParams &d, double epoch_ps = 0.0);

/// Curvature (Gauss-Newton) standard errors of the internal parameter vector,
/// scaled by the reduced chi-square. Singular directions give +inf.
std::vector<double> uncertainty(const FitResult &fr, const SampledCurve &s);

/// Parametric bootstrap: Poisson (count data) or Gaussian-residual resamples
/// of the fitted model, refit from the fitted parameters. Same order as uncertainty().
std::vector<double> bootstrap_uncertainty(const FitResult &fr, const SampledCurve &s, int n_resamples,
                                          std::uint64_t seed);

/// Names of the internal parameter vector used by uncertainty().
std::vector<std::string> internal_parameter_names(Model m);

} // namespace hom::fit
