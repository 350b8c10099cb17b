#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dualcal/loss.hpp"
#include "dualcal/posthoc.hpp"
#include "oracles.hpp"

using namespace dualcal;

namespace {

LabeledBatch scaled(LabeledBatch b, double s) {
    for (double& z : b.logits) z *= s;
    return b;
}

}  // namespace

TEST(ApplyTemperature, Examples) {
    const LabeledBatch b(2, {2.0, 4.0}, {0});
    EXPECT_EQ(apply_temperature(b, 1.0), b);
    const auto half = apply_temperature(b, 2.0);
    EXPECT_DOUBLE_EQ(half.logits[0], 1.0);
    EXPECT_DOUBLE_EQ(half.logits[1], 2.0);
    EXPECT_EQ(half.labels, b.labels);
}

TEST(ApplyTemperature, EntropyGrowsWithTemperature) {
    const LabeledBatch b(3, {0.5, 2.0, -1.0}, {1});
    double previous = -1.0;
    for (double t : {1.0, 10.0, 100.0}) {
        const auto h = entropy_and_kl(softmax(apply_temperature(b, t).row(0)), 1).entropy;
        EXPECT_GT(h, previous);
        previous = h;
    }
    EXPECT_NEAR(previous, std::log(3.0), 1e-3);
}

TEST(ApplyTemperature, RejectsNonPositive) {
    const LabeledBatch b(2, {2.0, 4.0}, {0});
    EXPECT_THROW(apply_temperature(b, 0.0), InvalidInput);
    EXPECT_THROW(apply_temperature(b, -1.0), InvalidInput);
    EXPECT_THROW(apply_temperature(b, NAN), InvalidInput);
}

TEST(ApplyTemperature, AccuracyInvariant) {
    std::mt19937_64 rng(1);
    const auto b = oracle::random_batch(rng, 500, 5);
    for (double t : {0.05, 0.3, 1.0, 2.7, 50.0}) EXPECT_EQ(error_rate(apply_temperature(b, t)), error_rate(b));
}

TEST(ApplyTemperature, Composes) {
    std::mt19937_64 rng(2);
    const auto b = oracle::random_batch(rng, 100, 4, 5.0);
    for (auto [t1, t2] : {std::pair{0.3, 2.0}, std::pair{1.7, 4.1}, std::pair{9.0, 0.2}}) {
        const auto twice = apply_temperature(apply_temperature(b, t1), t2);
        const auto once = apply_temperature(b, t1 * t2);
        for (std::size_t i = 0; i < b.logits.size(); ++i) EXPECT_NEAR(twice.logits[i], once.logits[i], 1e-12);
    }
}

TEST(FitTemperature, DefaultGrid) {
    const auto grid = default_temperature_grid();
    ASSERT_EQ(grid.size(), 100u);
    EXPECT_DOUBLE_EQ(grid.front(), 0.1);
    EXPECT_DOUBLE_EQ(grid.back(), 10.0);
    const auto fit = fit_temperature(oracle::calibrated_levels_batch());
    EXPECT_EQ(fit.curve.size(), 100u);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(fit.curve[i].first, grid[i]);
}

TEST(FitTemperature, CalibratedLevelsStayAtOne) {
    const auto fit = fit_temperature(oracle::calibrated_levels_batch());
    EXPECT_DOUBLE_EQ(fit.temperature, 1.0);
}

TEST(FitTemperature, RecoversScaleOnLevels) {
    for (double s : {0.5, 2.0, 3.0}) {
        const auto fit = fit_temperature(oracle::calibrated_levels_batch(s));
        EXPECT_NEAR(fit.temperature, s, 0.1 + 1e-12) << "scale " << s;
    }
}

TEST(FitTemperature, RecoversScaleOnSampledBatch) {
    const auto base = oracle::sampled_calibrated_batch(20000, 3, 1.5, 7);
    EXPECT_NEAR(fit_temperature(base).temperature, 1.0, 0.1 + 1e-12);
    for (double s : {0.5, 2.0, 3.0}) {
        const auto b = scaled(base, s);
        EXPECT_NEAR(fit_temperature(b).temperature, s, 0.1 + 1e-12) << "scale " << s;
        EXPECT_EQ(error_rate(b), error_rate(base));
    }
}

TEST(FitTemperature, ReturnsGlobalGridMinimum) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        const auto fit = fit_temperature(oracle::random_batch(rng, 300, 3, 1.0 + t));
        double at_t = -1.0;
        for (const auto& [temp, e] : fit.curve)
            if (temp == fit.temperature) at_t = e;
        ASSERT_GE(at_t, 0.0);
        for (const auto& [temp, e] : fit.curve) EXPECT_GE(e, at_t);
    }
}

TEST(FitTemperature, TiesPreferNearestOneThenSmaller) {
    // confidence 1.0 and always right: ECE is 0 for every T near 1 on this grid
    const LabeledBatch b(2, {100.0, 0.0, 100.0, 0.0}, {0, 0});
    EXPECT_DOUBLE_EQ(fit_temperature(b, {0.5, 0.9, 1.1, 1.5}).temperature, 0.9);
    EXPECT_DOUBLE_EQ(fit_temperature(b, {0.5, 1.0, 1.5}).temperature, 1.0);
    EXPECT_THROW(fit_temperature(b, {}), InvalidInput);
}
