#ifndef DUALCAL_LOSS_HPP
#define DUALCAL_LOSS_HPP

// Classification losses with analytic gradients with respect to the logits:
// cross-entropy, focal, FLSD-53, dual focal (and its dual-logit variants),
// Brier and label smoothing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualcal/error.hpp"
#include "dualcal/softmax.hpp"

namespace dualcal {

enum class LossKind {
    CrossEntropy,
    Focal,
    FocalFLSD53,
    DualFocal,
    DualFocalVariant,
    Brier,
    LabelSmoothing,
};

/// How the dual probability q_j is picked among the probabilities strictly
/// below the ground-truth probability.
enum class DualVariantKind {
    LargestBelowGT,
    KthLargestBelowGT,
    MeanTopMBelowGT,
    MeanAllBelowGT,
};

struct DualVariant {
    DualVariantKind kind = DualVariantKind::LargestBelowGT;
    std::size_t param = 1;  // k for KthLargest, m for MeanTopM

    static DualVariant largest() { return {}; }
    static DualVariant kth(std::size_t k) { return {DualVariantKind::KthLargestBelowGT, k}; }
    static DualVariant top_mean(std::size_t m) { return {DualVariantKind::MeanTopMBelowGT, m}; }
    static DualVariant all_mean() { return {DualVariantKind::MeanAllBelowGT, 0}; }
};

struct LossSpec {
    LossKind kind = LossKind::CrossEntropy;
    double gamma = 0.0;
    double smoothing = 0.05;
    DualVariant dual{};

    static LossSpec cross_entropy() { return {}; }
    static LossSpec focal(double gamma) { return {LossKind::Focal, gamma}; }
    static LossSpec flsd53() { return {LossKind::FocalFLSD53}; }
    static LossSpec dual_focal(double gamma) { return {LossKind::DualFocal, gamma}; }
    static LossSpec dual_focal(double gamma, DualVariant v) {
        return {LossKind::DualFocalVariant, gamma, 0.05, v};
    }
    static LossSpec brier() { return {LossKind::Brier}; }
    static LossSpec label_smoothing(double alpha = 0.05) {
        return {LossKind::LabelSmoothing, 0.0, alpha};
    }

    void validate() const {
        if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidInput("loss: gamma must be >= 0");
        if (kind == LossKind::LabelSmoothing && !(smoothing >= 0.0 && smoothing < 1.0))
            throw InvalidInput("loss: smoothing must lie in [0, 1)");
        if (kind == LossKind::DualFocalVariant &&
            (dual.kind == DualVariantKind::KthLargestBelowGT ||
             dual.kind == DualVariantKind::MeanTopMBelowGT) &&
            dual.param == 0)
            throw InvalidInput("loss: dual variant parameter must be >= 1");
    }
};

/// Command-line spelling of a loss kind.
inline std::string_view loss_name(LossKind kind) {
    switch (kind) {
        case LossKind::CrossEntropy: return "ce";
        case LossKind::Focal: return "focal";
        case LossKind::FocalFLSD53: return "flsd53";
        case LossKind::DualFocal: return "dfl";
        case LossKind::DualFocalVariant: return "dfl-variant";
        case LossKind::Brier: return "brier";
        case LossKind::LabelSmoothing: return "ls";
    }
    return "?";
}

inline LossKind parse_loss_kind(std::string_view name) {
    for (auto k : {LossKind::CrossEntropy, LossKind::Focal, LossKind::FocalFLSD53, LossKind::DualFocal,
                   LossKind::DualFocalVariant, LossKind::Brier, LossKind::LabelSmoothing})
        if (loss_name(k) == name) return k;
    throw InvalidInput("unknown loss '" + std::string(name) + "'");
}

/// Parses "largest", "kth:<k>", "top:<m>" or "mean".
inline DualVariant parse_dual_variant(std::string_view text) {
    auto number = [&](std::string_view digits) {
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string_view::npos)
            throw InvalidInput("bad dual variant '" + std::string(text) + "'");
        return static_cast<std::size_t>(std::stoul(std::string(digits)));
    };
    if (text == "largest") return DualVariant::largest();
    if (text == "mean") return DualVariant::all_mean();
    if (text.starts_with("kth:")) return DualVariant::kth(number(text.substr(4)));
    if (text.starts_with("top:")) return DualVariant::top_mean(number(text.substr(4)));
    throw InvalidInput("bad dual variant '" + std::string(text) + "'");
}

/// Sample-wise gamma of FLSD-53: 5 below 0.2, 3 from 0.2 on.
inline double flsd53_gamma(double p_gt) { return p_gt < 0.2 ? 5.0 : 3.0; }

struct DualSelection {
    double value = 0.0;
    std::vector<std::size_t> indices;  // probabilities averaged into value
    bool tie = false;                  // selection boundary sits on equal probabilities
    bool fallback = false;             // nothing was strictly below q_gt
};

/// Picks the dual probability q_j for ground-truth index `gt`.
///
/// Candidates are the probabilities strictly below probs[gt], ordered by
/// decreasing value with ties going to the smaller index. When no candidate
/// exists the maximum over i != gt is used instead. A k or m larger than the
/// candidate count is clamped to the count.
inline DualSelection select_dual_logit(std::span<const double> probs, std::size_t gt,
                                       DualVariant variant = {}) {
    if (gt >= probs.size()) throw InvalidInput("select_dual_logit: gt out of range");
    const double q_gt = probs[gt];

    std::vector<std::size_t> order;
    bool equal_to_gt = false;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (i == gt) continue;
        if (probs[i] < q_gt) order.push_back(i);
        else if (probs[i] == q_gt) equal_to_gt = true;
    }
    auto by_prob = [&](std::size_t a, std::size_t b) {
        return probs[a] != probs[b] ? probs[a] > probs[b] : a < b;
    };

    DualSelection out;
    if (order.empty()) {
        out.fallback = true;
        for (std::size_t i = 0; i < probs.size(); ++i)
            if (i != gt) order.push_back(i);
        std::sort(order.begin(), order.end(), by_prob);
        out.value = probs[order[0]];
        out.indices = {order[0]};
        out.tie = order.size() > 1 && probs[order[1]] == probs[order[0]];
        return out;
    }
    std::sort(order.begin(), order.end(), by_prob);
    const std::size_t n = order.size();
    auto same = [&](std::size_t a, std::size_t b) { return probs[order[a]] == probs[order[b]]; };

    switch (variant.kind) {
        case DualVariantKind::LargestBelowGT:
            out.indices = {order[0]};
            out.tie = (n > 1 && same(0, 1)) || equal_to_gt;
            break;
        case DualVariantKind::KthLargestBelowGT: {
            const std::size_t at = std::min(std::max<std::size_t>(variant.param, 1), n) - 1;
            out.indices = {order[at]};
            out.tie = (at + 1 < n && same(at, at + 1)) || (at > 0 && same(at, at - 1)) ||
                      (at == 0 && equal_to_gt);
            break;
        }
        case DualVariantKind::MeanTopMBelowGT: {
            const std::size_t take = std::min(std::max<std::size_t>(variant.param, 1), n);
            out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
            out.tie = (take < n && same(take - 1, take)) || equal_to_gt;
            break;
        }
        case DualVariantKind::MeanAllBelowGT:
            out.indices = order;
            out.tie = equal_to_gt;
            break;
    }
    double total = 0.0;
    for (std::size_t i : out.indices) total += probs[i];
    out.value = total / static_cast<double>(out.indices.size());
    return out;
}

struct GradResult {
    double loss = 0.0;
    std::vector<double> grad_logits;  // d loss / d logits
    bool tie = false;                 // dual-logit tie; gradient is of the smallest-index branch
};

struct EntropyKl {
    double entropy = 0.0;
    double kl = 0.0;  // KL(onehot(gt) || probs)
};

inline EntropyKl entropy_and_kl(std::span<const double> probs, std::size_t gt) {
    if (gt >= probs.size()) throw InvalidInput("entropy_and_kl: gt out of range");
    EntropyKl out;
    for (double q : probs)
        if (q > 0.0) out.entropy -= q * clamped_log(q);
    out.kl = -clamped_log(probs[gt]);
    return out;
}

namespace detail {

// gamma * base^(gamma-1), with the 0 * inf corners resolved to 0 because the
// caller always multiplies by a factor that vanishes with them.
inline double modulator_slope(double base, double gamma) {
    if (gamma == 0.0 || base <= 0.0) return 0.0;
    return gamma * std::pow(base, gamma - 1.0);
}

struct ModulatedTerms {
    double base = 1.0;
    double gamma = 0.0;
    DualSelection dual;
    bool uses_dual = false;
};

inline ModulatedTerms modulated_terms(const LossSpec& spec, std::span<const double> probs, std::size_t gt) {
    ModulatedTerms t;
    const double q_gt = probs[gt];
    switch (spec.kind) {
        case LossKind::Focal:
            t.gamma = spec.gamma;
            t.base = 1.0 - q_gt;
            break;
        case LossKind::FocalFLSD53:
            t.gamma = flsd53_gamma(q_gt);
            t.base = 1.0 - q_gt;
            break;
        case LossKind::DualFocal:
        case LossKind::DualFocalVariant: {
            t.gamma = spec.gamma;
            t.dual = select_dual_logit(probs, gt,
                                       spec.kind == LossKind::DualFocal ? DualVariant::largest() : spec.dual);
            t.uses_dual = true;
            t.base = 1.0 - q_gt + t.dual.value;
            break;
        }
        default:
            break;
    }
    return t;
}

inline void check_args(const LossSpec& spec, std::span<const double> logits, std::size_t gt) {
    spec.validate();
    if (gt >= logits.size()) throw InvalidInput("loss: gt out of range");
}

}  // namespace detail

/// Loss of one sample given raw logits and the ground-truth index.
inline double loss_value(const LossSpec& spec, std::span<const double> logits, std::size_t gt) {
    detail::check_args(spec, logits, gt);
    const auto probs = softmax(logits);
    const double nll = -clamped_log(probs[gt]);
    switch (spec.kind) {
        case LossKind::CrossEntropy:
            return nll;
        case LossKind::Brier: {
            double total = 0.0;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                const double d = probs[i] - (i == gt ? 1.0 : 0.0);
                total += d * d;
            }
            return total;
        }
        case LossKind::LabelSmoothing: {
            const double k = static_cast<double>(probs.size());
            double total = 0.0;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                const double target = (i == gt ? 1.0 - spec.smoothing : 0.0) + spec.smoothing / k;
                total -= target * clamped_log(probs[i]);
            }
            return total;
        }
        default: {
            const auto t = detail::modulated_terms(spec, probs, gt);
            return std::pow(t.base, t.gamma) * nll;
        }
    }
}

/// Loss and its gradient with respect to the logits.
///
/// The gradient is the chain rule through the softmax written as
/// grad_l = a_l - q_l * sum_k a_k with a_k = q_k * dL/dq_k, which never divides
/// by a probability. The FLSD-53 gamma and the dual-logit index set are held
/// fixed at the evaluation point.
inline GradResult loss_grad(const LossSpec& spec, std::span<const double> logits, std::size_t gt) {
    detail::check_args(spec, logits, gt);
    const auto probs = softmax(logits);
    const std::size_t k = probs.size();
    GradResult out;
    out.grad_logits.assign(k, 0.0);
    const double nll = -clamped_log(probs[gt]);

    switch (spec.kind) {
        case LossKind::CrossEntropy:
            out.loss = nll;
            for (std::size_t i = 0; i < k; ++i) out.grad_logits[i] = probs[i] - (i == gt ? 1.0 : 0.0);
            return out;
        case LossKind::LabelSmoothing: {
            const double uniform = spec.smoothing / static_cast<double>(k);
            for (std::size_t i = 0; i < k; ++i) {
                const double target = (i == gt ? 1.0 - spec.smoothing : 0.0) + uniform;
                out.loss -= target * clamped_log(probs[i]);
                out.grad_logits[i] = probs[i] - target;
            }
            return out;
        }
        default:
            break;
    }

    std::vector<double> a(k, 0.0);
    if (spec.kind == LossKind::Brier) {
        for (std::size_t i = 0; i < k; ++i) {
            const double d = probs[i] - (i == gt ? 1.0 : 0.0);
            out.loss += d * d;
            a[i] = probs[i] * 2.0 * d;
        }
    } else {
        const auto t = detail::modulated_terms(spec, probs, gt);
        const double weight = std::pow(t.base, t.gamma);
        const double slope = detail::modulator_slope(t.base, t.gamma) * nll;
        out.loss = weight * nll;
        a[gt] = -slope * probs[gt] - weight;
        if (t.uses_dual) {
            out.tie = t.dual.tie;
            const double share = 1.0 / static_cast<double>(t.dual.indices.size());
            for (std::size_t s : t.dual.indices) a[s] += slope * share * probs[s];
        }
    }
    double total = 0.0;
    for (double v : a) total += v;
    for (std::size_t i = 0; i < k; ++i) out.grad_logits[i] = a[i] - probs[i] * total;
    return out;
}

}  // namespace dualcal

#endif  // DUALCAL_LOSS_HPP
