#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hom/montecarlo.hpp"
#include "hom/types.hpp"

namespace hom {

/// Histogram of stop - start delays. Bin k (k = -half_bins..half_bins) is
/// centred at k*bin_width; a delay goes to the nearest centre, ties away
/// from zero, so exchanging the streams mirrors the histogram exactly.
struct CorrelationHistogram {
    std::int64_t bin_width_ps = 256;
    std::int64_t half_bins = 0;
    std::vector<std::uint64_t> counts;
    std::array<std::uint64_t, 2> n_tags{};
    std::uint64_t span_ps = 0;

    std::size_t size() const { return counts.size(); }
    double bin_center(std::size_t i) const;
    std::uint64_t total() const;

    /// Elementwise sum of histograms from disjoint stream segments.
    CorrelationHistogram &operator+=(const CorrelationHistogram &other);
};

/// Counts every pair (a in start, b in stop) with b - a inside the bin range
/// (bin centres within +-max_tau). Sliding window over sorted streams, so the
/// cost is O(n * pairs per window).
CorrelationHistogram correlate(const mc::TimeTagStream &start, const mc::TimeTagStream &stop,
                               std::int64_t bin_width_ps, std::int64_t max_tau_ps);

/// Areas of the centre peak and every complete side peak, window-wide
/// around k*rep_period. Bins straddling a window edge count fractionally.
/// Needs at least two complete side peaks on each side of zero.
PeakAreas integrate_peaks(const CorrelationHistogram &h, double rep_period_ps, double window_ps);

struct InterferenceMetrics {
    std::optional<Measured> pc;
    std::optional<Measured> pc_post;
    std::optional<Measured> ratio_par_b;
    double window_ps = 0.0;
    double post_window_ps = 0.0;

    bool defined() const { return pc && pc_post && ratio_par_b; }
};

/// Coalescence probability, postselected coalescence (counts within
/// +-post_window/2 of zero delay) and A_par/B. Quantities whose
/// denominators vanish are left empty.
InterferenceMetrics metrics(const PeakAreas &perp, const PeakAreas &par, const CorrelationHistogram &h_perp,
                            const CorrelationHistogram &h_par, double post_window_ps);

/// Centre area over mean side area of a single-source (HBT) histogram.
Measured hbt_purity(const CorrelationHistogram &h, double rep_period_ps, double window_ps);

} // namespace hom
