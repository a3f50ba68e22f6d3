#include "hom/types.hpp"

#include <algorithm>
#include <cmath>

namespace hom {

namespace {

void require(bool ok, const std::string &prefix, const std::string &field, const std::string &what) {
    if (!ok) {
        throw ParameterError(prefix + field + ": " + what);
    }
}

bool in_unit_interval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

} // namespace

std::string to_string(Polarization p) { return p == Polarization::parallel ? "parallel" : "orthogonal"; }

std::string to_string(IrfShape s) {
    switch (s) {
    case IrfShape::gaussian:
        return "gaussian";
    case IrfShape::two_sided_exponential:
        return "two_sided_exponential";
    case IrfShape::delta:
        return "delta";
    }
    return "delta";
}

Polarization parse_polarization(const std::string &s) {
    if (s == "parallel") return Polarization::parallel;
    if (s == "orthogonal") return Polarization::orthogonal;
    throw ParameterError("polarization: expected 'parallel' or 'orthogonal', got '" + s + "'");
}

IrfShape parse_irf_shape(const std::string &s) {
    if (s == "gaussian") return IrfShape::gaussian;
    if (s == "two_sided_exponential") return IrfShape::two_sided_exponential;
    if (s == "delta") return IrfShape::delta;
    throw ParameterError("irf_shape: expected 'gaussian', 'two_sided_exponential' or 'delta', got '" + s + "'");
}

void EmitterParams::validate(const std::string &prefix) const {
    require(std::isfinite(t1_ps) && t1_ps > 0.0, prefix, "t1_ps", "must be positive");
    require(std::isfinite(t2_ps) && t2_ps > 0.0, prefix, "t2_ps", "must be positive");
    // t2 = 2 t1 is the lifetime limit; allow rounding noise on top of it.
    require(t2_ps <= 2.0 * t1_ps * (1.0 + 1e-9), prefix, "t2_ps", "exceeds 2*t1_ps (negative pure dephasing)");
    require(std::isfinite(detuning_rad_per_ps), prefix, "detuning_rad_per_ps", "must be finite");
    require(in_unit_interval(efficiency), prefix, "efficiency", "must lie in [0,1]");
    require(in_unit_interval(multiphoton_residual) && multiphoton_residual <= 0.5, prefix, "multiphoton_residual",
            "must lie in [0,0.5]");
    if (dark_state) {
        require(std::isfinite(dark_state->slow_lifetime_ps) && dark_state->slow_lifetime_ps > 0.0, prefix,
                "dark_state.slow_lifetime_ps", "must be positive");
        require(in_unit_interval(dark_state->slow_fraction), prefix, "dark_state.slow_fraction", "must lie in [0,1]");
    }
}

void SetupParams::validate(const std::string &prefix) const {
    require(in_unit_interval(mode_overlap), prefix, "mode_overlap", "must lie in [0,1]");
    require(std::isfinite(rep_period_ps) && rep_period_ps > 0.0, prefix, "rep_period_ps", "must be positive");
    require(std::isfinite(background_rate) && background_rate >= 0.0, prefix, "background_rate",
            "must be non-negative");
}

void DetectorParams::validate(const std::string &prefix) const {
    require(std::isfinite(irf_fwhm_ps) && irf_fwhm_ps >= 0.0, prefix, "irf_fwhm_ps", "must be non-negative");
    if (irf_shape == IrfShape::delta) {
        require(irf_fwhm_ps == 0.0, prefix, "irf_fwhm_ps", "must be 0 for a delta response");
    } else {
        require(irf_fwhm_ps > 0.0, prefix, "irf_fwhm_ps", "must be positive for a non-delta response");
    }
    require(std::isfinite(dark_rate_per_ps) && dark_rate_per_ps >= 0.0, prefix, "dark_rate_per_ps",
            "must be non-negative");
}

std::vector<double> TauGrid::points() const {
    if (!(spacing_ps > 0.0) || !(half_range_ps >= 0.0)) {
        throw ParameterError("grid: spacing must be positive and half range non-negative");
    }
    const auto n = static_cast<long>(std::ceil(half_range_ps / spacing_ps - 1e-9));
    std::vector<double> out;
    out.reserve(static_cast<size_t>(2 * n + 1));
    for (long k = -n; k <= n; ++k) {
        out.push_back(static_cast<double>(k) * spacing_ps);
    }
    return out;
}

double CorrelationCurve::spacing() const { return tau_ps.size() < 2 ? 0.0 : tau_ps[1] - tau_ps[0]; }

double CorrelationCurve::area() const {
    double s = 0.0;
    for (double d : density) s += d;
    return s * spacing();
}

void CorrelationCurve::validate() const {
    if (tau_ps.size() != density.size()) throw ParameterError("curve: tau and density lengths differ");
    if (tau_ps.size() < 2) throw ParameterError("curve: needs at least two grid points");
    const double h = spacing();
    if (!(h > 0.0)) throw ParameterError("curve: tau grid must be strictly increasing");
    for (size_t i = 1; i < tau_ps.size(); ++i) {
        if (std::abs((tau_ps[i] - tau_ps[i - 1]) - h) > 1e-6 * h) {
            throw ParameterError("curve: tau grid must be uniform");
        }
    }
    if (std::any_of(density.begin(), density.end(), [](double d) { return !(d >= 0.0); })) {
        throw ParameterError("curve: density must be non-negative");
    }
}

void SampledCurve::validate() const {
    if (x.size() != y.size()) throw ParameterError("samples: x and y lengths differ");
    if (y_err && y_err->size() != y.size()) throw ParameterError("samples: y_err length differs from y");
    for (size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) throw ParameterError("samples: x must be strictly increasing");
    }
    for (double v : y) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("samples: y must be finite and non-negative");
    }
    if (y_err) {
        for (double v : *y_err) {
            if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError("samples: y_err must be positive");
        }
    }
}

} // namespace hom
