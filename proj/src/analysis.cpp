#include "hom/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "hom/correlation.hpp"
#include "hom/detail/window.hpp"

namespace hom {

namespace {

// Nearest bin index for delay tau, ties away from zero so that bin(-tau) = -bin(tau).
std::int64_t bin_index(std::int64_t tau, std::int64_t w) {
    const std::int64_t k = (2 * (tau < 0 ? -tau : tau) + w) / (2 * w);
    return tau < 0 ? -k : k;
}

void require_sorted(const mc::TimeTagStream &s, const char *name) {
    for (size_t i = 1; i < s.tags.size(); ++i) {
        if (s.tags[i] < s.tags[i - 1]) {
            throw ParameterError(std::string(name) + ": tags not sorted at index " + std::to_string(i));
        }
    }
}

Measured window_counts(const CorrelationHistogram &h, double lo, double hi) {
    const auto [sum, sum_sq] =
        detail::window_sum(h.size(), h.bin_center(0), static_cast<double>(h.bin_width_ps), lo, hi,
                           [&](size_t i) { return static_cast<double>(h.counts[i]); });
    return {sum, std::sqrt(sum_sq)};
}

} // namespace

double CorrelationHistogram::bin_center(std::size_t i) const {
    return static_cast<double>((static_cast<std::int64_t>(i) - half_bins) * bin_width_ps);
}

std::uint64_t CorrelationHistogram::total() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

CorrelationHistogram &CorrelationHistogram::operator+=(const CorrelationHistogram &other) {
    if (other.bin_width_ps != bin_width_ps || other.half_bins != half_bins) {
        throw ParameterError("histogram merge: binning differs");
    }
    for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    n_tags[0] += other.n_tags[0];
    n_tags[1] += other.n_tags[1];
    span_ps += other.span_ps;
    return *this;
}

CorrelationHistogram correlate(const mc::TimeTagStream &start, const mc::TimeTagStream &stop,
                               std::int64_t bin_width, std::int64_t max_tau) {
    if (bin_width <= 0) throw ParameterError("bin_width_ps: must be positive");
    if (max_tau < 0) throw ParameterError("max_tau_ps: must be non-negative");
    require_sorted(start, "start stream");
    require_sorted(stop, "stop stream");

    CorrelationHistogram h;
    h.bin_width_ps = bin_width;
    h.half_bins = max_tau / bin_width;
    h.counts.assign(static_cast<size_t>(2 * h.half_bins + 1), 0);
    h.n_tags = {start.tags.size(), stop.tags.size()};
    h.span_ps = std::max(start.duration_ps, stop.duration_ps);

    // Accepted delays: |tau| < (N + 1/2) w. Work in doubled units to stay integral.
    const std::int64_t hi2 = (2 * h.half_bins + 1) * bin_width;
    const auto &a = start.tags;
    const auto &b = stop.tags;
    size_t first = 0;
    for (const std::uint64_t ta : a) {
        const auto t = static_cast<std::int64_t>(ta);
        while (first < b.size() && 2 * (static_cast<std::int64_t>(b[first]) - t) <= -hi2) ++first;
        for (size_t j = first; j < b.size(); ++j) {
            const std::int64_t tau = static_cast<std::int64_t>(b[j]) - t;
            if (2 * tau >= hi2) break;
            ++h.counts[static_cast<size_t>(bin_index(tau, bin_width) + h.half_bins)];
        }
    }
    return h;
}

PeakAreas integrate_peaks(const CorrelationHistogram &h, double rep_period, double window) {
    if (!(rep_period > 0.0)) throw ParameterError("rep_period_ps: must be positive");
    if (!(window > 0.0)) throw ParameterError("window_ps: must be positive");
    if (window > rep_period) throw ParameterError("window_ps: exceeds rep_period_ps, peaks would overlap");
    if (h.counts.empty()) throw ParameterError("histogram: empty");
    const double w = static_cast<double>(h.bin_width_ps);
    const double edge = (static_cast<double>(h.half_bins) + 0.5) * w;

    PeakAreas out;
    out.rep_period_ps = rep_period;
    out.window_ps = window;
    out.center = window_counts(h, -0.5 * window, 0.5 * window);
    double sum = 0.0;
    double var = 0.0;
    const int kmax = static_cast<int>(std::floor(edge / rep_period)) + 1;
    for (int k = -kmax; k <= kmax; ++k) {
        if (k == 0) continue;
        const double c = k * rep_period;
        if (c - 0.5 * window < -edge || c + 0.5 * window > edge) continue;
        const Measured a = window_counts(h, c - 0.5 * window, c + 0.5 * window);
        out.side_index.push_back(k);
        out.side.push_back(a);
        sum += a.value;
        var += a.sigma * a.sigma;
    }
    const auto negative = std::count_if(out.side_index.begin(), out.side_index.end(), [](int k) { return k < 0; });
    const auto positive = static_cast<std::ptrdiff_t>(out.side_index.size()) - negative;
    if (negative < 2 || positive < 2) {
        throw ParameterError("histogram: span must hold at least two complete side peaks on each side");
    }
    const auto n = static_cast<double>(out.side.size());
    out.side_mean = {sum / n, std::sqrt(var) / n};
    return out;
}

InterferenceMetrics metrics(const PeakAreas &perp, const PeakAreas &par, const CorrelationHistogram &h_perp,
                            const CorrelationHistogram &h_par, double post_window) {
    if (h_perp.bin_width_ps != h_par.bin_width_ps || h_perp.half_bins != h_par.half_bins) {
        throw ParameterError("metrics: histogram binning differs between orthogonal and parallel data");
    }
    if (perp.window_ps != par.window_ps || perp.rep_period_ps != par.rep_period_ps) {
        throw ParameterError("metrics: integration windows differ between orthogonal and parallel data");
    }
    if (!(post_window > 0.0)) throw ParameterError("post_window_ps: must be positive");

    InterferenceMetrics m;
    m.window_ps = perp.window_ps;
    m.post_window_ps = post_window;
    if (perp.center.value > 0.0) m.pc = coalescence_probability(perp, par);
    if (!par.side.empty() && par.side_mean.value > 0.0) m.ratio_par_b = coincidence_ratio(par);

    const Measured g_perp = window_counts(h_perp, -0.5 * post_window, 0.5 * post_window);
    const Measured g_par = window_counts(h_par, -0.5 * post_window, 0.5 * post_window);
    if (g_perp.value > 0.0) {
        PeakAreas a_perp, a_par;
        a_perp.center = g_perp;
        a_par.center = g_par;
        m.pc_post = coalescence_probability(a_perp, a_par);
    }
    return m;
}

Measured hbt_purity(const CorrelationHistogram &h, double rep_period, double window) {
    return coincidence_ratio(integrate_peaks(h, rep_period, window));
}

} // namespace hom
