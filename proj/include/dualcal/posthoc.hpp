#ifndef DUALCAL_POSTHOC_HPP
#define DUALCAL_POSTHOC_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "dualcal/batch.hpp"
#include "dualcal/error.hpp"
#include "dualcal/metrics.hpp"

namespace dualcal {

struct TemperatureFit {
    double temperature = 1.0;
    std::vector<double> grid;
    std::vector<std::pair<double, double>> curve;  // (T, ECE after scaling)
};

inline LabeledBatch apply_temperature(LabeledBatch batch, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw InvalidInput("apply_temperature: T must be a positive finite number");
    for (double& z : batch.logits) z /= temperature;
    return batch;
}

/// 0.1, 0.2, ..., 10.0 (T = 0 is left out).
inline std::vector<double> default_temperature_grid() {
    std::vector<double> grid;
    grid.reserve(100);
    for (int i = 1; i <= 100; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

/// Grid search for the temperature minimizing post-scaling ECE.
///
/// Ties on ECE go to the temperature nearest 1, then to the smaller one.
inline TemperatureFit fit_temperature(const LabeledBatch& validation,
                                      std::vector<double> grid = default_temperature_grid(),
                                      std::size_t num_bins = kDefaultBins) {
    validation.validate();
    if (grid.empty()) throw InvalidInput("fit_temperature: empty grid");

    TemperatureFit fit;
    fit.curve.reserve(grid.size());
    for (double t : grid) fit.curve.emplace_back(t, ece(apply_temperature(validation, t), num_bins));

    auto better = [](const std::pair<double, double>& a, const std::pair<double, double>& b) {
        if (a.second != b.second) return a.second < b.second;
        const double da = std::abs(a.first - 1.0);
        const double db = std::abs(b.first - 1.0);
        if (da != db) return da < db;
        return a.first < b.first;
    };
    const auto* best = &fit.curve.front();
    for (const auto& point : fit.curve)
        if (better(point, *best)) best = &point;

    fit.temperature = best->first;
    fit.grid = std::move(grid);
    return fit;
}

}  // namespace dualcal

#endif  // DUALCAL_POSTHOC_HPP
