#ifndef DUALCAL_THEORY_HPP
#define DUALCAL_THEORY_HPP

// Risk-minimizer analysis of the dual focal loss.
//
// For a coordinate v of the risk minimizer and a fixed dual value C, the
// conditional-risk stationarity condition gives eta_i proportional to
// h(q_i) = q_i / phi(q_i) with
//
//   off-diagonal (i != j):  phi(v) = (1 - v + C)^g - g (1 - v + C)^(g-1) v log v
//   diagonal     (i == j):  phi(v) = 1                  (constant form)
//                           phi(v) = 1 - g v log v      (form used for order preservation)
//
// C = 0 recovers the focal loss. phi rises from (1+C)^g at 0 to a unique
// interior maximum v_m (the root of s below) and falls to C^g at 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualcal/bisection.hpp"
#include "dualcal/error.hpp"
#include "dualcal/loss.hpp"

namespace dualcal::theory {

enum class PhiVariant { OffDiagonal, DiagonalLemma, DiagonalAppendix };

inline std::string_view variant_name(PhiVariant v) {
    switch (v) {
        case PhiVariant::OffDiagonal: return "offdiag";
        case PhiVariant::DiagonalLemma: return "lemma";
        case PhiVariant::DiagonalAppendix: return "appendix";
    }
    return "?";
}

inline PhiVariant parse_variant(std::string_view name) {
    for (auto v : {PhiVariant::OffDiagonal, PhiVariant::DiagonalLemma, PhiVariant::DiagonalAppendix})
        if (variant_name(v) == name) return v;
    throw InvalidInput("unknown phi variant '" + std::string(name) + "'");
}

struct PhiContext {
    double gamma = 1.0;
    double c = 0.0;  // dual value, 0 for the focal loss
    PhiVariant variant = PhiVariant::OffDiagonal;

    void validate() const {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("theory: gamma must be > 0");
        if (!(c >= 0.0 && c < 1.0)) throw InvalidInput("theory: C must lie in [0, 1)");
    }
};

inline void require_unit(double v, const char* who) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput(std::string(who) + ": v must lie in [0, 1]");
}

/// phi at v in [0, 1]; v = 0 is the analytic limit.
inline double phi(double v, const PhiContext& ctx) {
    ctx.validate();
    require_unit(v, "phi");
    const double g = ctx.gamma;
    switch (ctx.variant) {
        case PhiVariant::DiagonalLemma:
            return 1.0;
        case PhiVariant::DiagonalAppendix:
            return v == 0.0 ? 1.0 : 1.0 - g * v * std::log(v);
        case PhiVariant::OffDiagonal:
            break;
    }
    if (v == 0.0) return std::pow(1.0 + ctx.c, g);
    if (v == 1.0) return std::pow(ctx.c, g);
    const double base = 1.0 - v + ctx.c;
    return std::pow(base, g) - g * std::pow(base, g - 1.0) * v * std::log(v);
}

inline double h(double v, const PhiContext& ctx) { return v / phi(v, ctx); }

/// Sign-carrying factor of dphi/dv for the off-diagonal case:
/// dphi/dv = g (1 - v + C)^(g-2) s(v).
inline double stationarity(double v, double gamma, double c) {
    const double lv = std::log(v);
    return 2.0 * (v - 1.0 - c) + gamma * v * lv - (1.0 + c) * lv;
}

/// u(v) = (1-v+C)^2 + 2 g v (1-v+C) + g v^2 log v; positive on (0,1) when g < 1.
inline double u_function(double v, double gamma, double c) {
    const double base = 1.0 - v + c;
    return base * base + 2.0 * gamma * v * base + gamma * v * v * std::log(v);
}

inline double u_derivative(double v, double gamma, double c) {
    return 2.0 * v - 2.0 - 2.0 * c + 2.0 * gamma + 2.0 * gamma * c - 3.0 * gamma * v +
           2.0 * gamma * v * std::log(v);
}

/// Numerator of dh/dv for the off-diagonal case.
inline double h_derivative_numerator(double v, double gamma, double c) {
    const double base = 1.0 - v + c;
    return std::pow(base, gamma) + 2.0 * gamma * v * std::pow(base, gamma - 1.0) -
           (gamma - 1.0) * gamma * v * v * std::pow(base, gamma - 2.0) * std::log(v);
}

inline constexpr double kRootTolerance = 1e-10;

namespace detail {
inline void require_off_diagonal(const PhiContext& ctx, const char* who) {
    ctx.validate();
    if (ctx.variant != PhiVariant::OffDiagonal)
        throw InvalidInput(std::string(who) + ": requires the off-diagonal variant");
}
}  // namespace detail

/// Interior maximizer of phi: the root of s on (0, 1).
///
/// s -> +inf as v -> 0 and s(1) = -2C. With C = 0 the root at 1 is the
/// boundary, so the bracket is moved inward until s turns negative; if it
/// never does, 1 is returned.
inline double find_vm(const PhiContext& ctx) {
    detail::require_off_diagonal(ctx, "find_vm");
    auto s = [&](double v) { return stationarity(v, ctx.gamma, ctx.c); };
    const double lo = 1e-12;
    double hi = 1.0;
    if (!(s(hi) < 0.0)) {
        hi = 0.5;
        while (hi < 1.0 && !(s(hi) < 0.0)) hi = 0.5 * (hi + 1.0);
        if (!(hi < 1.0)) return 1.0;
    }
    return bisect(s, lo, hi, {kRootTolerance, 200}).root;
}

inline double solve_phi_level(const PhiContext& ctx, double level, double v_m) {
    auto g = [&](double v) { return phi(v, ctx) - level; };
    return bisect(g, v_m, 1.0, {kRootTolerance, 200}).root;
}

/// Root of phi(v) = (1+C)^g on (v_m, 1].
inline double find_vprime(const PhiContext& ctx) {
    detail::require_off_diagonal(ctx, "find_vprime");
    return solve_phi_level(ctx, std::pow(1.0 + ctx.c, ctx.gamma), find_vm(ctx));
}

/// Root of phi(v) = 1 on (v_m, 1].
inline double find_vuc(const PhiContext& ctx) {
    detail::require_off_diagonal(ctx, "find_vuc");
    return solve_phi_level(ctx, 1.0, find_vm(ctx));
}

struct RegionAnalysis {
    double gamma = 0.0;
    double c = 0.0;
    double v_m = 0.0;
    double v_prime = 0.0;
    double v_uc = 0.0;
    double reduction = 0.0;  // v_uc - v_prime
    double tolerance = kRootTolerance;
};

inline RegionAnalysis analyze_regions(const PhiContext& ctx) {
    detail::require_off_diagonal(ctx, "analyze_regions");
    RegionAnalysis r;
    r.gamma = ctx.gamma;
    r.c = ctx.c;
    r.v_m = find_vm(ctx);
    r.v_prime = solve_phi_level(ctx, std::pow(1.0 + ctx.c, ctx.gamma), r.v_m);
    r.v_uc = solve_phi_level(ctx, 1.0, r.v_m);
    r.reduction = r.v_uc - r.v_prime;
    return r;
}

struct RiskMinimizerMap {
    std::vector<double> q_star;
    std::vector<double> eta;
    std::size_t dual_index = 0;
    double dual_value = 0.0;
};

/// Class posterior implied by a risk minimizer q*: eta_i = h(q*_i) / sum_k h(q*_k).
///
/// C is the dual value of q* (largest entry strictly below its maximum); the
/// dual coordinate uses `diagonal`, every other coordinate the off-diagonal phi.
inline RiskMinimizerMap eta_from_qstar(std::span<const double> q_star, double gamma,
                                       PhiVariant diagonal = PhiVariant::DiagonalAppendix) {
    if (q_star.size() < 2) throw InvalidInput("eta_from_qstar: need K >= 2");
    double total = 0.0;
    for (double q : q_star) {
        if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("eta_from_qstar: entries must lie in [0, 1]");
        total += q;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("eta_from_qstar: entries must sum to 1");
    if (diagonal == PhiVariant::OffDiagonal) throw InvalidInput("eta_from_qstar: diagonal variant expected");

    RiskMinimizerMap out;
    out.q_star.assign(q_star.begin(), q_star.end());
    const std::size_t top = argmax(q_star);
    const auto dual = select_dual_logit(q_star, top);
    out.dual_index = dual.indices.front();
    out.dual_value = dual.value;

    const PhiContext off{gamma, dual.value, PhiVariant::OffDiagonal};
    const PhiContext diag{gamma, dual.value, diagonal};
    out.eta.resize(q_star.size());
    for (std::size_t i = 0; i < q_star.size(); ++i)
        out.eta[i] = h(q_star[i], i == out.dual_index ? diag : off);
    const double norm = std::accumulate(out.eta.begin(), out.eta.end(), 0.0);
    for (double& e : out.eta) e /= norm;
    return out;
}

enum class ConfidenceRegime { OverConfident, UnderConfident, Calibrated };

inline std::string_view regime_name(ConfidenceRegime r) {
    switch (r) {
        case ConfidenceRegime::OverConfident: return "over-confident";
        case ConfidenceRegime::UnderConfident: return "under-confident";
        case ConfidenceRegime::Calibrated: return "calibrated";
    }
    return "?";
}

/// Sign of max q* - max eta, with |difference| <= tolerance read as calibrated.
inline ConfidenceRegime confidence_regime(std::span<const double> q_star, std::span<const double> eta,
                                          double tolerance = 1e-12) {
    if (q_star.empty() || eta.empty()) throw InvalidInput("confidence_regime: empty vector");
    const double diff = *std::max_element(q_star.begin(), q_star.end()) - *std::max_element(eta.begin(), eta.end());
    if (std::abs(diff) <= tolerance) return ConfidenceRegime::Calibrated;
    return diff > 0.0 ? ConfidenceRegime::OverConfident : ConfidenceRegime::UnderConfident;
}

struct PhiCurveRow {
    double v = 0.0;
    double focal = 0.0;     // off-diagonal phi with C = 0
    double dual = 0.0;      // off-diagonal phi with C
    double diagonal = 0.0;  // diagonal phi under the chosen convention
};

struct PhiCurve {
    double gamma = 0.0;
    double c = 0.0;
    PhiVariant diagonal = PhiVariant::DiagonalAppendix;
    std::vector<PhiCurveRow> rows;
    RegionAnalysis focal_regions;
    RegionAnalysis dual_regions;
};

/// Focal and dual-focal phi on `samples` evenly spaced points covering [0, 1]
/// (both endpoints included; v = 0 uses the analytic limit), plus the roots.
inline PhiCurve phi_curve(double gamma, double c, std::size_t samples,
                          PhiVariant diagonal = PhiVariant::DiagonalAppendix) {
    if (samples < 2) throw InvalidInput("phi_curve: need at least 2 samples");
    if (diagonal == PhiVariant::OffDiagonal) throw InvalidInput("phi_curve: diagonal variant expected");
    const PhiContext fl{gamma, 0.0, PhiVariant::OffDiagonal};
    const PhiContext dfl{gamma, c, PhiVariant::OffDiagonal};
    const PhiContext diag{gamma, c, diagonal};

    PhiCurve curve{gamma, c, diagonal, {}, analyze_regions(fl), analyze_regions(dfl)};
    curve.rows.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double v = i + 1 == samples ? 1.0 : static_cast<double>(i) / static_cast<double>(samples - 1);
        curve.rows.push_back({v, phi(v, fl), phi(v, dfl), phi(v, diag)});
    }
    return curve;
}

}  // namespace dualcal::theory

#endif  // DUALCAL_THEORY_HPP
