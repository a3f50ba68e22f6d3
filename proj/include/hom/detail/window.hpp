#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace hom::detail {

/// Weighted sum of uniformly spaced cells over [lo, hi). Cell i is centred
/// at first_center + i*spacing and contributes value(i) times the fraction
/// of the cell inside the window. Returns {sum, sum of weight^2 * value}.
template <class ValueAt>
std::pair<double, double> window_sum(std::size_t n_cells, double first_center, double spacing, double lo, double hi,
                                     ValueAt value) {
    double sum = 0.0;
    double sum_sq = 0.0;
    if (n_cells == 0 || !(hi > lo)) return {0.0, 0.0};
    const double start = first_center - 0.5 * spacing;
    const auto first = static_cast<long>(std::floor((lo - start) / spacing));
    const auto last = static_cast<long>(std::floor((hi - start) / spacing));
    for (long i = std::max(first, 0L); i <= std::min(last, static_cast<long>(n_cells) - 1); ++i) {
        const double cell_lo = start + static_cast<double>(i) * spacing;
        const double cell_hi = cell_lo + spacing;
        const double overlap = std::min(cell_hi, hi) - std::max(cell_lo, lo);
        if (overlap <= 0.0) continue;
        const double w = (cell_lo >= lo && cell_hi <= hi) ? 1.0 : overlap / spacing;
        const double v = value(static_cast<std::size_t>(i));
        sum += w * v;
        sum_sq += w * w * v;
    }
    return {sum, sum_sq};
}

} // namespace hom::detail
