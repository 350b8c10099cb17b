#ifndef DUALCAL_STATISTICS_HPP
#define DUALCAL_STATISTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dualcal/error.hpp"

namespace dualcal {

/// Quantile of sorted data with linear interpolation between closest ranks.
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InvalidInput("quantile: empty data");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Box-plot summary; whiskers are the extreme points within 1.5 IQR of the quartiles.
struct FiveNumberSummary {
    double lower_whisker = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double upper_whisker = 0.0;
    std::size_t outliers = 0;
};

inline FiveNumberSummary five_number_summary(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("five_number_summary: empty data");
    std::sort(values.begin(), values.end());
    FiveNumberSummary s;
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    const double fence = 1.5 * (s.q3 - s.q1);
    const double lo_fence = s.q1 - fence;
    const double hi_fence = s.q3 + fence;
    s.lower_whisker = s.q1;
    s.upper_whisker = s.q3;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            ++s.outliers;
            continue;
        }
        s.lower_whisker = std::min(s.lower_whisker, v);
        s.upper_whisker = std::max(s.upper_whisker, v);
    }
    return s;
}

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
};

/// Equal-width histogram over [min, max] of the data; constant data gives a single bar.
inline Histogram histogram(std::span<const double> values, std::size_t bins) {
    if (values.empty()) throw InvalidInput("histogram: empty data");
    if (bins == 0) throw InvalidInput("histogram: need at least one bin");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    Histogram h{*mn, *mx, {}};
    if (h.lo == h.hi) {
        h.counts = {values.size()};
        return h;
    }
    h.counts.assign(bins, 0);
    const double width = (h.hi - h.lo) / static_cast<double>(bins);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - h.lo) / width);
        ++h.counts[std::min(b, bins - 1)];
    }
    return h;
}

/// Lower median: the element at rank (n-1)/2, so the result is always a data point.
inline double lower_median(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("lower_median: empty data");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

}  // namespace dualcal

#endif  // DUALCAL_STATISTICS_HPP
