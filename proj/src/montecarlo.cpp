#include "hom/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "hom/correlation.hpp"
#include "hom/irf.hpp"

namespace hom::mc {

namespace {

double log_add(double a, double b) {
    const double hi = std::max(a, b);
    if (hi == -INFINITY) return hi;
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Log of the emission-time density (prompt exponential, optionally mixed with the slow channel).
double log_envelope(const EmitterParams &e, double t) {
    const double g = e.decay_rate();
    const double prompt = std::log(g) - g * t;
    if (!e.dark_state || e.dark_state->slow_fraction == 0.0) return prompt;
    const double f = e.dark_state->slow_fraction;
    const double gs = 1.0 / e.dark_state->slow_lifetime_ps;
    const double slow = std::log(gs) - gs * t;
    if (f == 1.0) return slow;
    return log_add(std::log1p(-f) + prompt, std::log(f) + slow);
}

double jitter(const irf::ChannelJitter &j, Rng &rng) {
    switch (j.shape) {
    case IrfShape::gaussian:
        return std::normal_distribution<double>(0.0, j.scale_ps)(rng);
    case IrfShape::two_sided_exponential:
        return std::exponential_distribution<double>(1.0 / j.scale_ps)(rng);
    case IrfShape::delta:
        break;
    }
    return 0.0;
}

Route coin(Rng &rng) { return std::bernoulli_distribution(0.5)(rng) ? Route::D3 : Route::D4; }

Route other(Route r) { return r == Route::D3 ? Route::D4 : Route::D3; }

std::vector<double> noise_clicks(double rate, double period, Rng &rng) {
    std::vector<double> out;
    if (rate <= 0.0) return out;
    const auto n = std::poisson_distribution<std::uint64_t>(rate * period)(rng);
    std::uniform_real_distribution<double> u(0.0, period);
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(u(rng));
    return out;
}

struct BatchOutput {
    std::vector<std::uint64_t> d3;
    std::vector<std::uint64_t> d4;
    SimulationCounters counters;
};

Rng batch_rng(std::uint64_t seed, std::uint64_t batch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32)};
    return Rng(seq);
}

} // namespace

std::string to_string(Channel c) { return c == Channel::D3 ? "D3" : "D4"; }

Channel parse_channel(const std::string &s) {
    if (s == "D3") return Channel::D3;
    if (s == "D4") return Channel::D4;
    throw ParameterError("channel: expected 'D3' or 'D4', got '" + s + "'");
}

void TimeTagStream::validate() const {
    for (size_t i = 1; i < tags.size(); ++i) {
        if (tags[i] <= tags[i - 1]) {
            throw ParameterError("tags: not strictly increasing at index " + std::to_string(i));
        }
    }
    if (!tags.empty() && tags.back() > duration_ps) throw ParameterError("tags: timestamp beyond duration");
}

double sample_emission_time(const EmitterParams &e, Rng &rng) {
    double mean = e.t1_ps;
    if (e.dark_state && e.dark_state->slow_fraction > 0.0 &&
        std::bernoulli_distribution(e.dark_state->slow_fraction)(rng)) {
        mean = e.dark_state->slow_lifetime_ps;
    }
    return std::exponential_distribution<double>(1.0 / mean)(rng);
}

double sample_detuning(const EmitterParams &e, Rng &rng) {
    const double hwhm = 1.0 / e.t2_ps - 0.5 / e.t1_ps;
    if (hwhm <= 0.0) return e.detuning_rad_per_ps;
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return e.detuning_rad_per_ps + hwhm * std::tan(M_PI * (u - 0.5));
}

PulsePairOutcome simulate_pulse(const EmitterParams &e1, const EmitterParams &e2, const SetupParams &setup,
                                const DetectorParams &d, Rng &rng, double noise_rate) {
    PulsePairOutcome out;
    const std::array<const EmitterParams *, 2> em{&e1, &e2};
    std::array<int, 2> main_index{-1, -1};

    for (int i = 0; i < 2; ++i) {
        const EmitterParams &e = *em[static_cast<size_t>(i)];
        const double p_extra = extra_photon_probability(e.multiphoton_residual);
        out.emitted[static_cast<size_t>(i)] = std::bernoulli_distribution(e.efficiency)(rng);
        if (out.emitted[static_cast<size_t>(i)]) {
            main_index[static_cast<size_t>(i)] = out.n_photons;
            out.photons[static_cast<size_t>(out.n_photons++)] =
                Photon{i, false, sample_emission_time(e, rng), sample_detuning(e, rng), Route::lost, 0.0};
        }
        if (p_extra > 0.0 && std::bernoulli_distribution(e.efficiency * p_extra)(rng)) {
            out.photons[static_cast<size_t>(out.n_photons++)] =
                Photon{i, true, sample_emission_time(e, rng), sample_detuning(e, rng), Route::lost, 0.0};
        }
    }

    const bool pair = main_index[0] >= 0 && main_index[1] >= 0;
    if (pair && setup.polarization == Polarization::parallel) {
        Photon &a = out.photons[static_cast<size_t>(main_index[0])];
        Photon &b = out.photons[static_cast<size_t>(main_index[1])];
        // Exchange visibility of the two wavepackets at the sampled times.
        const double direct = log_envelope(e1, a.emission_ps) + log_envelope(e2, b.emission_ps);
        const double exchanged = log_envelope(e2, a.emission_ps) + log_envelope(e1, b.emission_ps);
        const double envelope = 1.0 / std::cosh(0.5 * (direct - exchanged));
        const double visibility = envelope * std::cos((a.detuning - b.detuning) * (b.emission_ps - a.emission_ps));
        const double m2 = setup.mode_overlap * setup.mode_overlap;
        const double p_split = 0.5 * (1.0 - m2 * visibility);
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_split) {
            a.route = coin(rng);
            b.route = other(a.route);
        } else {
            a.route = coin(rng);
            b.route = a.route;
        }
    }
    const irf::ChannelJitter j = irf::channel_jitter(d);
    for (int k = 0; k < out.n_photons; ++k) {
        Photon &p = out.photons[static_cast<size_t>(k)];
        if (p.route == Route::lost) p.route = coin(rng);
        p.detection_ps = p.emission_ps + jitter(j, rng);
    }
    out.noise_d3 = noise_clicks(noise_rate, setup.rep_period_ps, rng);
    out.noise_d4 = noise_clicks(noise_rate, setup.rep_period_ps, rng);
    return out;
}

SimulationResult generate_streams(std::uint64_t n_pulses, const EmitterParams &e1, const EmitterParams &e2,
                                  const SetupParams &setup, const DetectorParams &d, std::uint64_t seed,
                                  unsigned workers) {
    e1.validate("emitters[0].");
    e2.validate("emitters[1].");
    setup.validate("setup.");
    d.validate("detector.");
    if (n_pulses == 0) throw ParameterError("n_pulses: must be at least 1");
    // Keep every timestamp exactly representable as a double before rounding.
    constexpr double kMaxSpan = 9007199254740992.0 / 2.0;
    const double span = static_cast<double>(n_pulses) * setup.rep_period_ps;
    if (span >= kMaxSpan) throw ParameterError("n_pulses: simulated span overflows the timestamp range");
    const auto duration = static_cast<std::uint64_t>(std::ceil(span));
    const double noise_rate = noise_rate_for_background(e1, e2, setup) + d.dark_rate_per_ps;

    const std::uint64_t n_batches = (n_pulses + kPulsesPerBatch - 1) / kPulsesPerBatch;
    std::vector<BatchOutput> batches(n_batches);

    auto run_batch = [&](std::uint64_t b) {
        Rng rng = batch_rng(seed, b);
        BatchOutput &out = batches[b];
        const std::uint64_t first = b * kPulsesPerBatch;
        const std::uint64_t last = std::min(n_pulses, first + kPulsesPerBatch);
        auto push = [&](std::vector<std::uint64_t> &dst, double t) {
            const double r = std::nearbyint(t);
            if (r < 0.0 || r > static_cast<double>(duration)) {
                ++out.counters.out_of_range;
                return;
            }
            dst.push_back(static_cast<std::uint64_t>(r));
        };
        for (std::uint64_t k = first; k < last; ++k) {
            const double epoch = static_cast<double>(k) * setup.rep_period_ps;
            const PulsePairOutcome p = simulate_pulse(e1, e2, setup, d, rng, noise_rate);
            ++out.counters.pulses;
            for (int i = 0; i < p.n_photons; ++i) {
                const Photon &ph = p.photons[static_cast<size_t>(i)];
                ++out.counters.photons_emitted[static_cast<size_t>(ph.emitter)];
                ++out.counters.photons_detected;
                push(ph.route == Route::D3 ? out.d3 : out.d4, epoch + ph.detection_ps);
            }
            out.counters.noise_clicks += p.noise_d3.size() + p.noise_d4.size();
            for (double t : p.noise_d3) push(out.d3, epoch + t);
            for (double t : p.noise_d4) push(out.d4, epoch + t);
        }
    };

    unsigned n_workers = workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers;
    n_workers = static_cast<unsigned>(std::min<std::uint64_t>(n_workers, n_batches));
    if (n_workers <= 1) {
        for (std::uint64_t b = 0; b < n_batches; ++b) run_batch(b);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (std::uint64_t b = next++; b < n_batches; b = next++) run_batch(b);
            });
        }
    }

    SimulationResult result;
    SeedRecord record;
    record.master_seed = seed;
    for (auto *s : {&result.d3, &result.d4}) {
        s->duration_ps = duration;
        s->seed = record;
    }
    result.d3.channel = Channel::D3;
    result.d4.channel = Channel::D4;
    size_t n3 = 0, n4 = 0;
    for (const auto &b : batches) {
        n3 += b.d3.size();
        n4 += b.d4.size();
    }
    result.d3.tags.reserve(n3);
    result.d4.tags.reserve(n4);
    auto &c = result.counters;
    for (auto &b : batches) {
        result.d3.tags.insert(result.d3.tags.end(), b.d3.begin(), b.d3.end());
        result.d4.tags.insert(result.d4.tags.end(), b.d4.begin(), b.d4.end());
        c.pulses += b.counters.pulses;
        c.photons_emitted[0] += b.counters.photons_emitted[0];
        c.photons_emitted[1] += b.counters.photons_emitted[1];
        c.photons_detected += b.counters.photons_detected;
        c.noise_clicks += b.counters.noise_clicks;
        c.out_of_range += b.counters.out_of_range;
        b = BatchOutput{};
    }
    for (auto *s : {&result.d3, &result.d4}) {
        std::sort(s->tags.begin(), s->tags.end());
        const auto end = std::unique(s->tags.begin(), s->tags.end());
        c.merged += static_cast<std::uint64_t>(s->tags.end() - end);
        s->tags.erase(end, s->tags.end());
    }
    return result;
}

SampledCurve generate_decay_curve(const EmitterParams &e, const DetectorParams &d, std::uint64_t n_events,
                                  double bin_width, double t_min, double t_max, std::uint64_t seed,
                                  double background_per_bin) {
    e.validate("emitter.");
    d.validate("detector.");
    if (!(bin_width > 0.0) || !(t_max > t_min)) throw ParameterError("decay histogram: invalid binning");
    const auto n_bins = static_cast<size_t>(std::floor((t_max - t_min) / bin_width));
    if (n_bins == 0) throw ParameterError("decay histogram: range shorter than one bin");
    std::vector<double> counts(n_bins, 0.0);
    Rng rng = batch_rng(seed, 0);
    const irf::ChannelJitter j = irf::channel_jitter(d);
    for (std::uint64_t i = 0; i < n_events; ++i) {
        const double t = sample_emission_time(e, rng) + jitter(j, rng);
        const double pos = (t - t_min) / bin_width;
        if (pos >= 0.0 && pos < static_cast<double>(n_bins)) counts[static_cast<size_t>(pos)] += 1.0;
    }
    if (background_per_bin > 0.0) {
        std::poisson_distribution<std::uint64_t> bg(background_per_bin);
        for (double &c : counts) c += static_cast<double>(bg(rng));
    }
    SampledCurve out;
    out.x.resize(n_bins);
    for (size_t i = 0; i < n_bins; ++i) out.x[i] = t_min + (static_cast<double>(i) + 0.5) * bin_width;
    out.y = std::move(counts);
    return out;
}

} // namespace hom::mc
