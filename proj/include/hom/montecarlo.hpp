#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hom/types.hpp"

/// Pulse-by-pulse photon-counting simulation of the two-source interferometer.
namespace hom::mc {

using Rng = std::mt19937_64;

/// Pulses per RNG substream. Fixed so that output never depends on how
/// batches are distributed over worker threads.
inline constexpr std::uint64_t kPulsesPerBatch = 4096;

enum class Channel { D3, D4 };
std::string to_string(Channel c);
Channel parse_channel(const std::string &s);

struct SeedRecord {
    std::string generator = "mt19937_64/seed_seq(master,batch)";
    std::uint64_t master_seed = 0;
    std::uint64_t pulses_per_batch = kPulsesPerBatch;
};

/// Click record of one detector.
struct TimeTagStream {
    Channel channel = Channel::D3;
    /// Strictly increasing absolute timestamps, ps.
    std::vector<std::uint64_t> tags;
    std::uint64_t duration_ps = 0;
    SeedRecord seed;

    void validate() const;
};

enum class Route { D3, D4, lost };

struct Photon {
    int emitter = 0;         // 0 or 1
    bool extra = false;      // multi-photon residual, never interferes
    double emission_ps = 0;  // relative to the pulse
    double detuning = 0;     // rad/ps, sampled
    Route route = Route::lost;
    double detection_ps = 0; // emission + channel jitter
};

/// Everything that happened in one excitation pulse (times relative to the pulse).
struct PulsePairOutcome {
    std::array<bool, 2> emitted{};
    std::array<Photon, 4> photons{};
    int n_photons = 0;
    /// Uniform noise clicks (dark counts and background) inside the period.
    std::vector<double> noise_d3;
    std::vector<double> noise_d4;
};

double sample_emission_time(const EmitterParams &e, Rng &rng);

/// Static Lorentzian detuning, HWHM = pure dephasing rate, centred on e.detuning.
double sample_detuning(const EmitterParams &e, Rng &rng);

/// Simulates one pulse. `noise_rate_per_ps` is the per-channel uniform click
/// rate; generate_streams derives it from background_rate and dark_rate.
PulsePairOutcome simulate_pulse(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup,
                                const DetectorParams &d, Rng &rng, double noise_rate_per_ps);

struct SimulationCounters {
    std::uint64_t pulses = 0;
    std::array<std::uint64_t, 2> photons_emitted{}; // per emitter, main + extra
    std::uint64_t photons_detected = 0;
    std::uint64_t noise_clicks = 0;
    /// Clicks outside [0, duration] (first/last pulse jitter) that were dropped.
    std::uint64_t out_of_range = 0;
    /// Clicks dropped because a same-channel click had the same picosecond.
    std::uint64_t merged = 0;
};

struct SimulationResult {
    TimeTagStream d3;
    TimeTagStream d4;
    SimulationCounters counters;
};

/// Simulates n_pulses at epochs k*rep_period. Deterministic in `seed`,
/// independent of `workers` (0 = hardware concurrency).
SimulationResult generate_streams(std::uint64_t n_pulses, const EmitterParams &e1, const EmitterParams &e2,
                                  const SetupParams &setup, const DetectorParams &d, std::uint64_t seed,
                                  unsigned workers = 0);

/// Pulse-synchronous decay histogram of one emitter seen through one
/// detector channel: `n_events` detected photons binned over [t_min, t_max)
/// plus `background_per_bin` mean uniform counts (Poisson) per bin.
SampledCurve generate_decay_curve(const EmitterParams &e, const DetectorParams &d, std::uint64_t n_events,
                                  double bin_width_ps, double t_min_ps, double t_max_ps, std::uint64_t seed,
                                  double background_per_bin = 0.0);

} // namespace hom::mc
