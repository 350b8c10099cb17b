#ifndef DUALCAL_SOFTMAX_HPP
#define DUALCAL_SOFTMAX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dualcal/error.hpp"

namespace dualcal {

/// Lower clamp applied to probabilities before taking a logarithm.
inline constexpr double kLogClamp = 1e-12;

inline double clamped_log(double p) { return std::log(std::clamp(p, kLogClamp, 1.0)); }

inline void require_finite(std::span<const double> values, const char* what) {
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite value");
}

/// Numerically stable softmax (max-shifted).
inline std::vector<double> softmax(std::span<const double> logits) {
    if (logits.size() < 2) throw InvalidInput("softmax: need at least two logits");
    require_finite(logits, "softmax");
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - top);
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

/// Index of the largest entry; ties go to the smallest index.
inline std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

}  // namespace dualcal

#endif  // DUALCAL_SOFTMAX_HPP
