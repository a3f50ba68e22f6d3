#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "hom/types.hpp"

namespace hom {

/// Invalid or unreadable run configuration. The message starts with the
/// offending field path, e.g. "emitters[1].t2_ps: ...".
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct SimulationSettings {
    std::uint64_t n_pulses = 1000000;
    std::uint64_t seed = 1;
    /// 0 = hardware concurrency. Never changes results.
    unsigned workers = 0;
    bool operator==(const SimulationSettings &) const = default;
};

struct AnalysisSettings {
    std::int64_t bin_width_ps = 256;
    /// Peak integration window, centred on each peak.
    double window_ps = 13140.0;
    /// Full width of the zero-delay window used for postselection.
    double post_window_ps = 256.0;
    std::int64_t max_tau_ps = 72270;
    bool operator==(const AnalysisSettings &) const = default;
};

struct CurveSettings {
    double spacing_ps = 4.0;
    int n_side_peaks = 3;
    bool operator==(const CurveSettings &) const = default;
};

struct RunConfig {
    std::array<EmitterParams, 2> emitters{};
    SetupParams setup;
    DetectorParams detector;
    SimulationSettings simulation;
    AnalysisSettings analysis;
    CurveSettings curve;
    std::string output_dir = "out";

    /// Checks every nested invariant; throws ConfigError naming the field.
    void validate() const;
    bool operator==(const RunConfig &) const = default;
};

/// Parses JSON text. Absent fields keep their defaults, unknown fields and
/// wrong types are errors.
RunConfig parse_config(const std::string &json_text);
std::string serialize_config(const RunConfig &c);
RunConfig load_config(const std::string &path);

} // namespace hom
