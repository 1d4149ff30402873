#include <gtest/gtest.h>

#include <pointerlab/density.hpp>
#include <pointerlab/statistics.hpp>
#include <pointerlab/unraveling.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

using namespace pointerlab;

namespace {

ComplexField pair_of_packets(const SpatialGrid& g, double c1sq, double x1, double x2, double width) {
    const ComplexField a = gaussian_packet(g, x1, width), b = gaussian_packet(g, x2, width);
    ComplexField f(g);
    for (std::size_t j = 0; j < g.size(); ++j)
        f.amplitudes[j] = std::sqrt(c1sq) * a.amplitudes[j] + std::sqrt(1.0 - c1sq) * b.amplitudes[j];
    return normalize(std::move(f));
}

UnravelingConfig small_config(const SpatialGrid& g, double gamma) {
    UnravelingConfig cfg;
    cfg.evolution.kappa = 0.1;
    cfg.evolution.dt = stable_dt(g, 0.1);
    cfg.evolution.kernel = MomentumKernel::gaussian(gamma);
    cfg.evolution.stop_when_converged = false;
    return cfg;
}

// <q^2> under the jump density G(q)(1 - |chi(q)|^2) by midpoint quadrature.
double jump_second_moment(const ComplexField& f) {
    const int n = 20000;
    const double h = 16.0 / n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double q = -8.0 + (i + 0.5) * h;
        const double w = std::exp(-0.5 * q * q) * (1.0 - std::norm(characteristic(f, q)));
        num += w * q * q;
        den += w;
    }
    return num / den;
}

}  // namespace

TEST(Characteristic, GaussianPacket) {
    const SpatialGrid g(512, 40.0);
    const double m = 1.3, s = 0.6;
    const ComplexField f = gaussian_packet(g, m, s);
    for (double q : {-2.0, 0.0, 0.5, 3.0}) {
        const complex expected = std::polar(std::exp(-0.5 * q * q * s * s), q * m);
        EXPECT_LE(std::abs(characteristic(f, q) - expected), 1e-12);
    }
}

TEST(JumpRate, PositionEigenstateHasNoJumps) {
    const SpatialGrid g(128, 10.0);
    ComplexField f(g);
    f.amplitudes[70] = 1.0 / std::sqrt(g.spacing());
    const auto kernel = MomentumKernel::gaussian();
    EXPECT_NEAR(total_jump_rate(f, kernel), 0.0, 1e-12);
    EXPECT_THROW(apply_jump(f, 1.0), JumpUndefinedError);
}

// gamma (1 - a_psi) with a_psi = 1/sqrt(1 + 2 s^2) for a Gaussian.
TEST(JumpRate, GaussianPacketClosedForm) {
    const SpatialGrid g(512, 40.0);
    const double s = 0.8, gamma = 2.5;
    const double expected = gamma * (1.0 - 1.0 / std::sqrt(1.0 + 2.0 * s * s));
    EXPECT_NEAR(total_jump_rate(gaussian_packet(g, -0.4, s), MomentumKernel::gaussian(gamma)), expected, 1e-8);
}

TEST(JumpRate, EqualFarSuperpositionIsHalfGamma) {
    const SpatialGrid g(1024, 60.0);
    const ComplexField f = pair_of_packets(g, 0.5, -10.0, 10.0, 0.1);
    EXPECT_NEAR(total_jump_rate(f, MomentumKernel::gaussian(1.0)), 0.5, 1e-2);
}

// Far-apart packets: full rate = reduced two-level rate + sum p_j^2 r_self.
TEST(JumpRate, DecomposesIntoReducedAndSelfRates) {
    const SpatialGrid g(2048, 80.0);
    const double s = 0.6, gamma = 1.7;
    const auto kernel = MomentumKernel::gaussian(gamma);
    for (double c1sq : {0.5, 0.8}) {
        const ComplexField f = pair_of_packets(g, c1sq, -15.0, 15.0, s);
        const double reduced = 2.0 * gamma * c1sq * (1.0 - c1sq);
        const double self = total_jump_rate(gaussian_packet(g, 0.0, s), kernel);
        const double sum_sq = c1sq * c1sq + (1.0 - c1sq) * (1.0 - c1sq);
        EXPECT_NEAR(total_jump_rate(f, kernel), reduced + sum_sq * self, 1e-8);
    }
}

TEST(Jump, IsOrthogonalAndNormalized) {
    const SpatialGrid g(256, 20.0);
    const ComplexField f = pair_of_packets(g, 0.7, -2.0, 3.0, 0.8);
    for (double q : {-1.7, 0.3, 2.2}) {
        const ComplexField j = apply_jump(f, q);
        EXPECT_LT(std::abs(inner_product(f, j)), 1e-10);
        EXPECT_NEAR(j.norm_squared(), 1.0, 1e-12);
    }
}

TEST(Sampler, ThinningAndMetropolisMatchJumpDensity) {
    const SpatialGrid g(256, 24.0);
    const ComplexField f = pair_of_packets(g, 0.6, -1.5, 1.5, 0.5);
    const auto kernel = MomentumKernel::gaussian();
    const double oracle = jump_second_moment(f);
    RngStream a(21, 0), b(21, 1);
    const int n = 20000;
    double thin = 0.0, thin4 = 0.0, mh = 0.0;
    for (int i = 0; i < n; ++i) {
        const double q = sample_jump_momentum(f, kernel, a);
        thin += q * q;
        thin4 += q * q * q * q;
        const double r = sample_jump_momentum_mh(f, kernel, b, 50);
        mh += r * r;
    }
    thin /= n;
    mh /= n;
    const double se = std::sqrt((thin4 / n - thin * thin) / n);
    EXPECT_NEAR(thin, oracle, 4.0 * se);
    EXPECT_NEAR(mh, oracle, 4.0 * se);
}

// Histogram of 1e5 thinning draws on a frozen state against r_q / r_tot.
TEST(Sampler, ThinningHistogramPassesChiSquare) {
    const SpatialGrid g(256, 24.0);
    const ComplexField f = pair_of_packets(g, 0.7, -1.0, 2.0, 0.6);
    const auto kernel = MomentumKernel::gaussian();
    const double lo = -4.0, hi = 4.0;
    const std::size_t bins = 20;
    const double width = (hi - lo) / bins;
    std::vector<double> mass(bins + 2, 0.0);
    const int sub = 400;
    const double h = 16.0 / (sub * 20);
    for (int i = 0; i < sub * 20; ++i) {
        const double q = -8.0 + (i + 0.5) * h;
        const double w = std::exp(-0.5 * q * q) * (1.0 - std::norm(characteristic(f, q))) * h;
        if (q < lo) mass[0] += w;
        else if (q >= hi) mass[bins + 1] += w;
        else mass[1 + static_cast<std::size_t>((q - lo) / width)] += w;
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    for (auto& m : mass) m /= total;
    mass.back() = 1.0 - std::accumulate(mass.begin(), mass.end() - 1, 0.0);

    std::vector<std::uint64_t> counts(bins + 2, 0);
    RngStream rng(77, 0);
    for (int i = 0; i < 100000; ++i) {
        const double q = sample_jump_momentum(f, kernel, rng);
        if (q < lo) ++counts[0];
        else if (q >= hi) ++counts[bins + 1];
        else ++counts[1 + static_cast<std::size_t>((q - lo) / width)];
    }
    const double chi2 = chi_square_statistic(OutcomeHistogram(counts, mass));
    EXPECT_LT(chi2, chi_square_quantile(static_cast<double>(bins + 1), 0.999));
}

TEST(Trajectory, ZeroGammaNeverJumpsAndFollowsTheFlow) {
    const SpatialGrid g(256, 20.0);
    const ComplexField f = pair_of_packets(g, 0.7, -2.0, 3.0, 0.8);
    auto cfg = small_config(g, 0.0);
    cfg.evolution.t_max = 2.0;
    RngStream rng(4, 0);
    const auto traj = sample_trajectory(f, 2.0, cfg, rng);
    EXPECT_TRUE(traj.events.empty());
    const auto det = evolve_nonlinear(f, cfg.evolution);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LE(std::abs(traj.final_field.amplitudes[j] - det.final_field.amplitudes[j]), 1e-12);
}

TEST(Trajectory, JumpsAreOrthogonalAndReproducible) {
    const SpatialGrid g(256, 20.0);
    const ComplexField f = gaussian_packet(g, 0.0, 2.0);
    const auto cfg = small_config(g, 1.0);
    RngStream r1(99, 5), r2(99, 5);
    const auto a = sample_trajectory(f, 5.0, cfg, r1);
    const auto b = sample_trajectory(f, 5.0, cfg, r2);
    ASSERT_FALSE(a.events.empty());
    EXPECT_LT(a.max_jump_overlap, 1e-10);
    EXPECT_EQ(a.stream_id, 5u);
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        EXPECT_EQ(a.events[i].time, b.events[i].time);
        EXPECT_EQ(a.events[i].q, b.events[i].q);
        EXPECT_NEAR(a.events[i].norm, 1.0, 1e-12);
    }
    EXPECT_NEAR(a.final_field.norm_squared(), 1.0, 1e-10);
}

TEST(DensityMatrix, PurityOfPureAndMixedStates) {
    const SpatialGrid g(64, 20.0);
    const ComplexField a = gaussian_packet(g, -5.0, 0.5), b = gaussian_packet(g, 5.0, 0.5);
    const auto pure = GridDensityMatrix::pure(a);
    EXPECT_NEAR(pure.trace(), 1.0, 1e-12);
    EXPECT_NEAR(pure.purity(), 1.0, 1e-12);
    const auto mixed = ensemble_density({a, b});
    EXPECT_NEAR(mixed.purity(), 0.5, 1e-10);
    EXPECT_LT(mixed.hermiticity_error(), 1e-15);
    EXPECT_GT(mixed.min_eigenvalue(), -1e-12);
    EXPECT_NEAR(trace_distance(pure, pure), 0.0, 1e-12);
    EXPECT_NEAR(trace_distance(pure, GridDensityMatrix::pure(b)), 1.0, 1e-8);
}

TEST(DensityMatrix, RejectsLargeGridsAndEmptyEnsembles) {
    EXPECT_THROW(GridDensityMatrix(SpatialGrid(512, 10.0)), GridError);
    EXPECT_THROW(ensemble_density({}), OracleError);
}
