#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dualcal/theory.hpp"

using namespace dualcal;
using namespace dualcal::theory;

namespace {

PhiContext off(double g, double c) { return {g, c, PhiVariant::OffDiagonal}; }

// Values below were produced with an external scientific-python session.
constexpr double kH_g1_c03_half = 0.4360819089491752;
constexpr double kEta0 = 0.7889425068889507;
constexpr double kEta1 = 0.21105749311104935;
constexpr double kVm_g1_c03 = 0.13533528323661717;  // e^-2
constexpr double kVprime_g1_c03 = 0.3678794411714424;  // e^-1
constexpr double kVuc_g1_c03 = 0.604351159412053;

std::vector<std::size_t> rank_order(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    return idx;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> q(k);
    double s = 0.0;
    for (double& x : q) s += (x = e(rng));
    for (double& x : q) x /= s;
    return q;
}

}  // namespace

TEST(Phi, BoundaryValues) {
    EXPECT_DOUBLE_EQ(phi(0.0, off(1, 0.3)), 1.3);
    EXPECT_DOUBLE_EQ(phi(1.0, off(1, 0.3)), 0.3);
    EXPECT_DOUBLE_EQ(phi(1.0, off(1, 0.0)), 0.0);
    EXPECT_DOUBLE_EQ(phi(0.0, off(1, 0.0)), 1.0);
    for (double g : {0.5, 1.0, 2.0, 5.0}) {
        EXPECT_DOUBLE_EQ(phi(1.0, {g, 0.4, PhiVariant::DiagonalAppendix}), 1.0);
        EXPECT_NEAR(phi(1.0 - 1e-9, {g, 0.4, PhiVariant::DiagonalAppendix}), 1.0, 1e-8);
        EXPECT_DOUBLE_EQ(phi(0.37, {g, 0.4, PhiVariant::DiagonalLemma}), 1.0);
    }
}

TEST(Phi, ContinuousAtEndpoints) {
    for (double g : {1.0, 2.0, 5.0})
        for (double c : {0.1, 0.5, 0.9}) {
            EXPECT_NEAR(phi(1e-9, off(g, c)) / phi(0.0, off(g, c)), 1.0, 1e-6);
            EXPECT_NEAR(phi(1.0 - 1e-9, off(g, c)), phi(1.0, off(g, c)), 1e-6);
        }
}

TEST(Phi, RejectsBadArguments) {
    EXPECT_THROW(phi(1.5, off(1, 0.3)), InvalidInput);
    EXPECT_THROW(phi(-0.1, off(1, 0.3)), InvalidInput);
    EXPECT_THROW(phi(0.5, off(0.0, 0.3)), InvalidInput);
    EXPECT_THROW(phi(0.5, off(1.0, 1.0)), InvalidInput);
    EXPECT_THROW(phi(0.5, off(1.0, -0.1)), InvalidInput);
}

TEST(H, FrozenValue) {
    EXPECT_NEAR(phi(0.5, off(1, 0.3)), 0.8 - 0.5 * std::log(0.5), 1e-15);
    EXPECT_NEAR(h(0.5, off(1, 0.3)), kH_g1_c03_half, 1e-12);
}

TEST(H, PositiveAndStrictlyIncreasing) {
    for (double g : {0.5, 1.0, 2.0, 5.0})
        for (int ci = 0; ci <= 9; ++ci) {
            const auto ctx = off(g, ci / 10.0);
            double previous = 0.0;
            for (int i = 1; i < 1000; ++i) {
                const double v = i / 1000.0;
                const double value = h(v, ctx);
                EXPECT_GT(value, previous) << "gamma " << g << " C " << ctx.c << " v " << v;
                previous = value;
            }
        }
}

TEST(Eta, FrozenTwoClassValue) {
    const std::vector<double> q{0.7, 0.3};
    const auto r = eta_from_qstar(q, 1.0);
    EXPECT_NEAR(r.eta[0], kEta0, 1e-10);
    EXPECT_NEAR(r.eta[1], kEta1, 1e-10);
    EXPECT_EQ(r.dual_index, 1u);
    EXPECT_DOUBLE_EQ(r.dual_value, 0.3);
}

TEST(Eta, UniformMapsToUniform) {
    for (std::size_t k : {2u, 3u, 10u}) {
        const std::vector<double> q(k, 1.0 / static_cast<double>(k));
        for (double g : {1.0, 2.0, 5.0}) {
            const auto r = eta_from_qstar(q, g);
            for (double e : r.eta) EXPECT_NEAR(e, 1.0 / static_cast<double>(k), 1e-12);
        }
    }
}

TEST(Eta, PreservesRankOrder) {
    std::mt19937_64 rng(12);
    for (double g : {1.0, 2.0, 5.0})
        for (std::size_t k : {3u, 10u})
            for (int t = 0; t < 1000; ++t) {
                const auto q = random_simplex(rng, k);
                const auto r = eta_from_qstar(q, g);
                EXPECT_NEAR(std::accumulate(r.eta.begin(), r.eta.end(), 0.0), 1.0, 1e-12);
                EXPECT_EQ(rank_order(r.eta), rank_order(q));
            }
}

TEST(Eta, RejectsInvalidSimplex) {
    EXPECT_THROW(eta_from_qstar(std::vector<double>{0.7, 0.7}, 1.0), InvalidInput);
    EXPECT_THROW(eta_from_qstar(std::vector<double>{1.0}, 1.0), InvalidInput);
    EXPECT_THROW(eta_from_qstar(std::vector<double>{0.7, 0.3}, 1.0, PhiVariant::OffDiagonal), InvalidInput);
}

TEST(Stationarity, SignFacts) {
    for (double g : {1.0, 2.0, 3.0, 5.0})
        for (int ci = 0; ci <= 9; ++ci) {
            const double c = ci / 10.0;
            EXPECT_DOUBLE_EQ(stationarity(1.0, g, c), -2.0 * c);
            EXPECT_DOUBLE_EQ(u_function(1.0, g, c), c * c + 2.0 * g * c);
            EXPECT_GT(stationarity(1e-9, g, c), 0.0);
            // s'' = g/v + (1+C)/v^2 > 0, checked with second differences
            for (int i = 1; i < 100; ++i) {
                const double v = i / 100.0, d = 1e-4;
                const double second =
                    (stationarity(v + d, g, c) - 2.0 * stationarity(v, g, c) + stationarity(v - d, g, c)) / (d * d);
                EXPECT_NEAR(second, g / v + (1.0 + c) / (v * v), 1e-3 * (1.0 + (1.0 + c) / (v * v)));
                EXPECT_GT(second, 0.0);
            }
        }
}

// u is decreasing on (0, 1) in the gamma <= 1 regime; for gamma > 1 the
// derivative at 1 is -gamma + 2C(gamma - 1), which turns positive for large C.
TEST(Stationarity, UDecreasingForGammaAtMostOne) {
    for (double g : {0.25, 0.5, 0.75, 1.0})
        for (int ci = 0; ci <= 9; ++ci) {
            const double c = ci / 10.0;
            double previous = u_function(1e-4, g, c);
            for (int i = 1; i <= 1000; ++i) {
                const double v = i / 1000.0;
                const double value = u_function(v, g, c);
                EXPECT_LT(value, previous) << "gamma " << g << " C " << c << " v " << v;
                EXPECT_LE(u_derivative(v, g, c), 1e-12);
                previous = value;
            }
            EXPECT_NEAR(u_derivative(1.0, g, c), -g - 2.0 * c * (1.0 - g), 1e-12);
        }
}

TEST(Stationarity, UDerivativeMatchesFiniteDifference) {
    for (double g : {0.5, 1.0, 3.0})
        for (double c : {0.0, 0.4, 0.9})
            for (int i = 1; i < 20; ++i) {
                const double v = i / 20.0, d = 1e-6;
                const double fd = (u_function(v + d, g, c) - u_function(v - d, g, c)) / (2 * d);
                EXPECT_NEAR(u_derivative(v, g, c), fd, 1e-6);
            }
}

TEST(Stationarity, HDerivativeNumeratorPositive) {
    for (double g : {0.5, 1.0, 2.0, 3.0, 5.0})
        for (int ci = 0; ci <= 9; ++ci)
            for (int i = 1; i < 1000; ++i)
                EXPECT_GT(h_derivative_numerator(i / 1000.0, g, ci / 10.0), 0.0);
}

TEST(Stationarity, HDerivativeNumeratorMatchesFiniteDifference) {
    // h' = numerator / phi^2 for the off-diagonal case
    for (double g : {0.5, 2.0, 5.0})
        for (double c : {0.0, 0.3, 0.8})
            for (int i = 1; i < 20; ++i) {
                const double v = i / 20.0, d = 1e-6;
                const auto ctx = off(g, c);
                const double fd = (h(v + d, ctx) - h(v - d, ctx)) / (2 * d);
                const double p = phi(v, ctx);
                EXPECT_NEAR(h_derivative_numerator(v, g, c) / (p * p), fd, 1e-6 * (1.0 + std::abs(fd)));
            }
}

TEST(Roots, FrozenValuesAtFigureParameters) {
    const auto r = analyze_regions(off(1, 0.3));
    EXPECT_NEAR(r.v_m, kVm_g1_c03, 1e-9);
    EXPECT_NEAR(r.v_prime, kVprime_g1_c03, 1e-9);
    EXPECT_NEAR(r.v_uc, kVuc_g1_c03, 1e-9);
    EXPECT_GT(r.v_uc, r.v_prime);
    EXPECT_NEAR(r.reduction, r.v_uc - r.v_prime, 0.0);
    EXPECT_EQ(r.tolerance, 1e-10);
}

TEST(Roots, VmIsGridMaximum) {
    const auto ctx = off(1, 0.3);
    const double vm = find_vm(ctx);
    EXPECT_LE(std::abs(stationarity(vm, 1, 0.3)), 1e-10);
    double best_v = 0.0, best = -1.0;
    for (int i = 0; i <= 10000; ++i) {
        const double v = i / 10000.0;
        if (phi(v, ctx) > best) best = phi(v, ctx), best_v = v;
    }
    EXPECT_NEAR(vm, best_v, 1e-4);
    EXPECT_GE(phi(vm, ctx), best - 1e-12);
}

TEST(Roots, PhiShapeAndResiduals) {
    for (double g : {1.0, 2.0, 3.0, 5.0})
        for (int ci = 1; ci <= 9; ++ci) {
            const double c = ci / 10.0;
            const auto ctx = off(g, c);
            const auto r = analyze_regions(ctx);
            EXPECT_LE(std::abs(stationarity(r.v_m, g, c)), 1e-8);
            EXPECT_LE(std::abs(phi(r.v_prime, ctx) - std::pow(1 + c, g)), 1e-8);
            EXPECT_LE(std::abs(phi(r.v_uc, ctx) - 1.0), 1e-8);
            EXPECT_LT(r.v_m, r.v_prime);
            EXPECT_LE(r.v_prime, r.v_uc);
            EXPECT_LT(r.v_uc, 1.0);
            EXPECT_GT(r.reduction, 0.0);
            const double eps = 1e-3;
            for (int i = 1; i <= 2000; ++i) {
                const double a = (i - 1) / 2000.0, b = i / 2000.0;
                if (b <= r.v_m - eps) {
                    EXPECT_LT(phi(a, ctx), phi(b, ctx));
                }
                if (a >= r.v_m + eps) {
                    EXPECT_GT(phi(a, ctx), phi(b, ctx));
                }
            }
        }
}

TEST(Roots, FocalBoundary) {
    // with C = 0, s(1) = 0 but the interior stationary point still exists
    for (double g : {1.0, 2.0, 5.0}) {
        const auto ctx = off(g, 0.0);
        const double vm = find_vm(ctx);
        EXPECT_GT(vm, 0.0);
        EXPECT_LT(vm, 1.0);
        EXPECT_LE(std::abs(stationarity(vm, g, 0.0)), 1e-8);
        const auto r = analyze_regions(ctx);
        EXPECT_NEAR(r.v_prime, r.v_uc, 1e-9);  // (1+0)^g = 1
    }
}

TEST(Roots, RequireOffDiagonal) {
    EXPECT_THROW(find_vm({1.0, 0.3, PhiVariant::DiagonalLemma}), InvalidInput);
    EXPECT_THROW(find_vuc({1.0, 0.3, PhiVariant::DiagonalAppendix}), InvalidInput);
}

TEST(Roots, MissingBracketNamesEndpoints) {
    try {
        solve_phi_level(off(1, 0.3), 5.0, 0.2);
        FAIL() << "expected a bracket error";
    } catch (const NumericalError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("0.2"), std::string::npos) << what;
        EXPECT_NE(what.find("1"), std::string::npos) << what;
    }
}

TEST(Regime, Examples) {
    const std::vector<double> q{0.6, 0.3, 0.1};
    EXPECT_EQ(confidence_regime(q, q), ConfidenceRegime::Calibrated);
    EXPECT_EQ(confidence_regime(std::vector<double>{0.9, 0.1}, std::vector<double>{0.7, 0.3}),
              ConfidenceRegime::OverConfident);
    EXPECT_EQ(confidence_regime(std::vector<double>{0.5, 0.5}, std::vector<double>{0.8, 0.2}),
              ConfidenceRegime::UnderConfident);
}

TEST(Curve, Examples) {
    const auto curve = phi_curve(1.0, 0.3, 100);
    ASSERT_EQ(curve.rows.size(), 100u);
    EXPECT_DOUBLE_EQ(curve.rows.front().dual, 1.3);
    EXPECT_DOUBLE_EQ(curve.rows.front().focal, 1.0);
    EXPECT_DOUBLE_EQ(curve.rows.back().dual, 0.3);
    EXPECT_DOUBLE_EQ(curve.rows.back().focal, 0.0);
    EXPECT_DOUBLE_EQ(curve.rows.back().v, 1.0);
    EXPECT_NEAR(curve.rows[1].dual, 1.3, 0.1);
    for (std::size_t i = 1; i < curve.rows.size(); ++i) EXPECT_GT(curve.rows[i].v, curve.rows[i - 1].v);
    EXPECT_GT(curve.dual_regions.v_uc, curve.focal_regions.v_prime);
}

TEST(Curve, FocalOnlyDiffersByC) {
    const auto curve = phi_curve(1.0, 0.0, 50);
    for (const auto& r : curve.rows) EXPECT_EQ(r.focal, r.dual);
    EXPECT_DOUBLE_EQ(curve.rows.front().dual, 1.0);
    EXPECT_DOUBLE_EQ(curve.rows.back().dual, 0.0);
}
