#ifndef DUALCAL_GRADCHECK_HPP
#define DUALCAL_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dualcal/loss.hpp"
#include "dualcal/random.hpp"
#include "dualcal/softmax.hpp"

namespace dualcal {

struct GradcheckOptions {
    std::size_t trials = 200;  // accepted (non-skipped) trials
    std::uint64_t seed = 1;
    double step = 1e-5;        // central-difference step
    double tolerance = 1e-5;   // max relative error
    double tie_margin = 1e-4;  // skip points this close to a branch switch
    double logit_scale = 3.0;  // logits drawn from U(-scale, scale)
};

struct GradcheckReport {
    std::size_t trials = 0;
    std::size_t skipped = 0;
    std::size_t failures = 0;
    double worst_relative_error = 0.0;

    bool passed() const { return failures == 0 && trials > 0; }
};

/// ||a - b||_inf / max(||a||_inf, ||b||_inf), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    }
    return scale == 0.0 ? 0.0 : diff / scale;
}

/// True when the loss has a piecewise switch within `margin` of this point:
/// two probabilities nearly equal (dual-logit selection) or, for FLSD-53,
/// q_gt near the 0.2 gamma switch.
inline bool near_branch_switch(const LossSpec& spec, const std::vector<double>& probs, std::size_t gt,
                               double margin) {
    if (spec.kind == LossKind::FocalFLSD53) return std::abs(probs[gt] - 0.2) < margin;
    if (spec.kind != LossKind::DualFocal && spec.kind != LossKind::DualFocalVariant) return false;
    std::vector<double> sorted = probs;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] - sorted[i - 1] < margin) return true;
    return false;
}

/// Compares loss_grad against central finite differences of loss_value on
/// random logits with K classes.
inline GradcheckReport run_gradcheck(const LossSpec& spec, std::size_t num_classes, GradcheckOptions opts = {}) {
    spec.validate();
    GradcheckReport report;
    Rng rng(opts.seed);
    std::vector<double> logits(num_classes);
    std::vector<double> numeric(num_classes);
    while (report.trials < opts.trials) {
        for (double& z : logits) z = rng.uniform(-opts.logit_scale, opts.logit_scale);
        const auto gt = static_cast<std::size_t>(rng.below(num_classes));
        if (near_branch_switch(spec, softmax(logits), gt, opts.tie_margin)) {
            ++report.skipped;
            continue;
        }
        const auto analytic = loss_grad(spec, logits, gt);
        for (std::size_t i = 0; i < num_classes; ++i) {
            auto plus = logits;
            auto minus = logits;
            plus[i] += opts.step;
            minus[i] -= opts.step;
            numeric[i] = (loss_value(spec, plus, gt) - loss_value(spec, minus, gt)) / (2.0 * opts.step);
        }
        const double err = relative_error(analytic.grad_logits, numeric);
        report.worst_relative_error = std::max(report.worst_relative_error, err);
        if (!(err <= opts.tolerance)) ++report.failures;
        ++report.trials;
    }
    return report;
}

}  // namespace dualcal

#endif  // DUALCAL_GRADCHECK_HPP
