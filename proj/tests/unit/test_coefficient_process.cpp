#include <gtest/gtest.h>

#include <pointerlab/coefficients.hpp>
#include <pointerlab/statistics.hpp>

#include <cmath>

using namespace pointerlab;

namespace {

std::vector<complex> amplitudes(const std::vector<double>& p) {
    std::vector<complex> c;
    for (double v : p) c.emplace_back(std::sqrt(v), 0.0);
    return c;
}

}  // namespace

TEST(CoefficientState, ValidatesInput) {
    const auto k = MomentumKernel::gaussian();
    EXPECT_THROW(CoefficientState::make({1.0, 1.0}, {0.0, 20.0}, k), NormError);
    EXPECT_THROW(CoefficientState::make({1.0}, {0.0, 20.0}, k), ConfigError);
    const auto s = CoefficientState::make(amplitudes({0.5, 0.5}), {0.0, 0.0}, k);
    RngStream rng(1, 0);
    EXPECT_THROW(sample_coefficient_trajectory(s, k, rng), ConfigError);
}

// Saturated N = 2 with weights 0.8 / 0.2: the drift factors are +0.12 and -0.48.
TEST(CoefficientFlow, DerivativeForUnequalPair) {
    const auto s = CoefficientState::make(amplitudes({0.8, 0.2}), {-10.0, 10.0}, MomentumKernel::gaussian());
    const auto d = coefficient_derivative(s);
    EXPECT_NEAR(d[0].real() / s.c[0].real(), 0.12, 1e-12);
    EXPECT_NEAR(d[1].real() / s.c[1].real(), -0.48, 1e-12);
    // The flow preserves the norm.
    EXPECT_NEAR(2.0 * (std::conj(s.c[0]) * d[0] + std::conj(s.c[1]) * d[1]).real(), 0.0, 1e-15);
}

TEST(Rate, EqualSaturatedPairIsHalfGamma) {
    const auto k = MomentumKernel::gaussian(3.0);
    const auto s = CoefficientState::make(amplitudes({0.5, 0.5}), {-10.0, 10.0}, k);
    EXPECT_NEAR(total_rate(s), 1.5, 1e-12);
}

TEST(Rate, QuadratureMatchesClosedForm) {
    const auto k = MomentumKernel::gaussian(1.3);
    const auto s = CoefficientState::make(amplitudes({0.2, 0.5, 0.3}), {-0.7, 0.4, 1.9}, k);
    EXPECT_NEAR(total_rate_quadrature(s, k), total_rate(s), 1e-8);
    EXPECT_GT(jump_rate(s, 1.0, k), 0.0);
    EXPECT_NEAR(jump_rate(CoefficientState::make(amplitudes({1.0, 0.0, 0.0}), {-0.7, 0.4, 1.9}, k), 1.0, k), 0.0, 1e-15);
}

// For N = 2 an orthogonal jump exchanges the two moduli for every q.
TEST(Jump, SwapsModuliForTwoPackets) {
    const auto s = CoefficientState::make(amplitudes({0.7, 0.3}), {0.0, 2.0}, MomentumKernel::gaussian());
    for (double q : {-2.3, 0.4, 1.1}) {
        const auto after = jump_redistribute(s, q).weights();
        EXPECT_NEAR(after[0], 0.3, 1e-12);
        EXPECT_NEAR(after[1], 0.7, 1e-12);
    }
    const auto pointer = CoefficientState::make(amplitudes({1.0, 0.0}), {0.0, 2.0}, MomentumKernel::gaussian());
    EXPECT_THROW(jump_redistribute(pointer, 1.0), JumpUndefinedError);
}

TEST(Trajectory, PointerStateEndsImmediately) {
    const auto k = MomentumKernel::gaussian();
    const auto s = CoefficientState::make(amplitudes({0.0, 1.0, 0.0}), {-20.0, 0.0, 20.0}, k);
    RngStream rng(3, 0);
    const auto out = sample_coefficient_trajectory(s, k, rng);
    EXPECT_EQ(out.index, 1);
    EXPECT_EQ(out.jump_count, 0u);
    EXPECT_EQ(out.t_end, 0.0);
}

TEST(Trajectory, DeterministicFlowPicksLargestWeight) {
    const auto k = MomentumKernel::gaussian();
    const auto s = CoefficientState::make(amplitudes({0.3, 0.5, 0.2}), {-20.0, 0.0, 20.0}, k);
    RngStream rng(3, 0);
    CoefficientOptions opt;
    opt.jumps = false;
    const auto out = sample_coefficient_trajectory(s, k, rng, opt);
    EXPECT_EQ(out.index, 1);
    EXPECT_EQ(out.jump_count, 0u);
    EXPECT_GT(out.final_weights[1], 1.0 - 1e-6);
}

TEST(Trajectory, VanishingRatesTimeOut) {
    const auto k = MomentumKernel::gaussian(0.0);
    const auto s = CoefficientState::make(amplitudes({0.4, 0.6}), {-20.0, 20.0}, k);
    RngStream rng(3, 0);
    EXPECT_THROW(sample_coefficient_trajectory(s, k, rng), TimeoutError);
}

TEST(N2Analytics, IntegratedRateAndOddJumpProbability) {
    const auto a = n2_analytics(0.3);
    EXPECT_NEAR(a.mu_infinity, 0.4581, 1e-4);
    EXPECT_NEAR(a.prob_odd, 0.3, 1e-12);
    EXPECT_THROW(n2_analytics(0.5), UnstableEquilibriumError);
    EXPECT_THROW(n2_analytics(1.0), DomainError);
}

// Outcome frequencies and the odd-jump fraction follow the initial weights.
TEST(Trajectory, TwoPacketOutcomesFollowWeights) {
    const auto k = MomentumKernel::gaussian();
    const auto s = CoefficientState::make(amplitudes({0.3, 0.7}), {-10.0, 10.0}, k);
    const std::uint64_t n = 4000;
    std::uint64_t first = 0, odd = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        RngStream rng(17, i);
        const auto out = sample_coefficient_trajectory(s, k, rng);
        first += out.index == 0;
        odd += out.jump_count % 2;
    }
    EXPECT_TRUE(within_binomial(first, n, 0.3, 4.0));
    EXPECT_TRUE(within_binomial(odd, n, n2_analytics(0.3).prob_odd, 4.0));
}

TEST(Basin, FlowEndpoints) {
    const auto s = CoefficientState::make(amplitudes({1.0, 0.0, 0.0}), {-20.0, 0.0, 20.0}, MomentumKernel::gaussian());
    EXPECT_EQ(flow_endpoint(s.F, {0.5, 0.3, 0.2}, 1e4), 0);
    EXPECT_EQ(flow_endpoint(s.F, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 50.0), -1);
}

TEST(Basin, SmallSaturatedMapHasNoMismatches) {
    const auto map = basin_map({-20.0, 0.0, 20.0}, MomentumKernel::gaussian(), 12, 1e4);
    EXPECT_EQ(map.cells.size(), 66u);
    EXPECT_GT(map.interior, 0u);
    EXPECT_EQ(map.mismatches, 0u);
    EXPECT_THROW(basin_map({0.0, 1.0}, MomentumKernel::gaussian()), ConfigError);
}

TEST(Simplex, NormalizedReproducibleAndUniform) {
    RngStream a(8, 2), b(8, 2);
    for (int i = 0; i < 100; ++i) {
        const auto c = simplex_sample(6, a);
        double n2 = 0.0;
        for (const auto& ci : c) n2 += std::norm(ci);
        EXPECT_NEAR(n2, 1.0, 1e-12);
        EXPECT_EQ(c, simplex_sample(6, b));
    }
    RngStream rng(9, 0);
    std::vector<double> first;
    for (int i = 0; i < 100000; ++i) first.push_back(std::norm(simplex_sample(2, rng)[0]));
    EXPECT_GT(ks_uniform(first).p_value, 1e-3);
    EXPECT_THROW(simplex_sample(1, rng), ConfigError);
}
