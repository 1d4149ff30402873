#include <gtest/gtest.h>

#include <pointerlab/analysis.hpp>
#include <pointerlab/dynamics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace pointerlab;

namespace {

constexpr double kKappa = 0.1;

const ComplexField& soliton() {
    static const ComplexField field = [] {
        auto r = relax_to_soliton(kKappa, 1e-8, 600.0);
        if (!r.evolution.converged) throw DivergenceError("soliton relaxation did not converge", r.evolution.steps);
        return spectral_shift(r.evolution.final_field, -expectation_values(r.evolution.final_field).position);
    }();
    return field;
}

EvolutionConfig config_for(const ComplexField& f, double t_max) {
    EvolutionConfig cfg;
    cfg.kappa = kKappa;
    cfg.dt = stable_dt(f.grid, kKappa);
    cfg.t_max = t_max;
    cfg.stop_when_converged = false;
    return cfg;
}

double variance(const ComplexField& f) {
    const double s = position_spread(f);
    return s * s;
}

}  // namespace

TEST(Expectations, GaussianPacket) {
    const SpatialGrid g(512, 40.0);
    const auto e = expectation_values(gaussian_packet(g, 1.25, 0.8, 1.5));
    EXPECT_NEAR(e.position, 1.25, 1e-12);
    EXPECT_NEAR(e.momentum, 1.5, 1e-10);
    EXPECT_NEAR(e.momentum_imag_residue, 0.0, 1e-12);
}

TEST(Evolution, RejectsUnstableStep) {
    const SpatialGrid g(256, 20.0);
    EvolutionConfig cfg;
    cfg.kappa = 1.0;
    cfg.dt = 1.0 / (g.max_wavenumber() * g.max_wavenumber());
    EXPECT_THROW(cfg.validate(g), ConfigError);
    cfg.dt = 1e-4;
    cfg.kappa = 0.0;
    EXPECT_THROW(cfg.validate(g), ConfigError);
}

TEST(Evolution, NonFiniteFieldRaisesDivergence) {
    const SpatialGrid g(128, 20.0);
    ComplexField f = gaussian_packet(g, 0.0, 1.0);
    f.amplitudes[10] = {std::numeric_limits<double>::quiet_NaN(), 0.0};
    EvolutionConfig cfg;
    cfg.kappa = 0.1;
    cfg.dt = 1e-3;
    cfg.t_max = 0.1;
    EXPECT_THROW(evolve_nonlinear(f, cfg), DivergenceError);
}

// With gamma = 0 the flow is free Schroedinger spreading and never settles.
TEST(Evolution, ZeroGammaIsFreeDispersion) {
    const SpatialGrid g(512, 120.0);
    EvolutionConfig cfg;
    cfg.kappa = 0.5;
    cfg.dt = 0.005;
    cfg.t_max = 10.0;
    cfg.kernel = MomentumKernel::gaussian(0.0);
    const auto r = evolve_nonlinear(gaussian_packet(g, 0.0, 1.0), cfg);
    EXPECT_FALSE(r.converged);
    const double expected = 1.0 + std::pow(0.5 * 10.0 / 2.0, 2);
    EXPECT_LE(std::abs(variance(r.final_field) - expected) / expected, 1e-6);
}

TEST(Soliton, IsAFixedPointOfTheFlow) {
    const ComplexField& s = soliton();
    const auto r = evolve_nonlinear(s, config_for(s, 5.0));
    ASSERT_FALSE(r.drift_history.empty());
    for (double d : r.drift_history) EXPECT_LT(d, 1e-6);
    EXPECT_NEAR(expectation_values(r.final_field).position, 0.0, 1e-8);
    EXPECT_LT(l2_distance(comoving_modulus(r.final_field), comoving_modulus(s)), 1e-5);
}

TEST(Soliton, TranslatedSolitonStaysPut) {
    const ComplexField moved = spectral_shift(soliton(), 2.0);
    const auto r = evolve_nonlinear(moved, config_for(moved, 5.0));
    EXPECT_NEAR(expectation_values(r.final_field).position, 2.0, 1e-7);
    EXPECT_LT(l2_distance(comoving_modulus(r.final_field), comoving_modulus(soliton())), 1e-5);
}

// A boosted soliton moves rigidly at velocity kappa k0.
TEST(Soliton, GalileanBoost) {
    const double k0 = 2.0, t = 5.0;
    const ComplexField moving = pointerlab::boost(soliton(), k0);
    const auto r = evolve_nonlinear(moving, config_for(moving, t));
    const auto e = expectation_values(r.final_field);
    EXPECT_NEAR(e.momentum, k0, 1e-6);
    EXPECT_NEAR(e.position, kKappa * k0 * r.t_final, 1e-7);
    EXPECT_LT(l2_distance(comoving_modulus(r.final_field), comoving_modulus(soliton())), 1e-4);
}

// In the co-moving frame the phase gradient of a moving soliton is stationary.
TEST(Soliton, CoMovingPhaseGradientIsStationary) {
    const ComplexField moving = pointerlab::boost(soliton(), 1.0);
    auto gradient_at = [&](double t) {
        const auto r = evolve_nonlinear(moving, config_for(moving, t));
        const ComplexField back = spectral_shift(r.final_field, -expectation_values(r.final_field).position);
        const RealField mod = back.modulus();
        const double top = *std::max_element(mod.values.begin(), mod.values.end());
        std::vector<double> grad(back.size(), 0.0);
        for (std::size_t j = 1; j < back.size(); ++j)
            if (mod.values[j] > 1e-3 * top && mod.values[j - 1] > 1e-3 * top)
                grad[j] = std::arg(back.amplitudes[j] / back.amplitudes[j - 1]) / back.grid.spacing();
        return grad;
    };
    const auto a = gradient_at(2.0), b = gradient_at(4.0);
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
    EXPECT_LT(worst, 1e-4);
}

// Unequal superposition of two well separated solitons keeps the heavier one.
TEST(Soliton, SuperpositionCollapsesOntoHeavierBranch) {
    const ComplexField& s = soliton();
    const double sep = 10.0 * position_spread(s);
    ComplexField pair(s.grid);
    const ComplexField left = spectral_shift(s, -0.5 * sep), right = spectral_shift(s, 0.5 * sep);
    for (std::size_t j = 0; j < pair.size(); ++j)
        pair.amplitudes[j] = std::sqrt(0.8) * left.amplitudes[j] + std::sqrt(0.2) * right.amplitudes[j];
    normalize_in_place(pair);
    EvolutionConfig cfg = config_for(pair, 100.0);
    cfg.stop_when_converged = true;
    const auto r = evolve_nonlinear(pair, cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(expectation_values(r.final_field).position, -0.5 * sep, 0.05 * sep);
    EXPECT_NEAR(position_spread(r.final_field), position_spread(s), 0.02 * position_spread(s));
}

TEST(Classical, FreeMotionIsUniform) {
    const auto path = classical_trajectory(0.0, 1.0, Potential::none(), 0.3, 10.0, 0.01, -100.0, 100.0, 100);
    for (const auto& pt : path) {
        EXPECT_NEAR(pt.x, 0.3 * pt.t, 1e-12);
        EXPECT_DOUBLE_EQ(pt.p, 1.0);
    }
}

TEST(Classical, LinearForceMomentumIsExact) {
    const double alpha = 0.7;
    const auto path = classical_trajectory(0.0, 2.0, Potential::linear(alpha), 1.0, 5.0, 0.05, -100.0, 100.0);
    for (const auto& pt : path) {
        EXPECT_NEAR(pt.p, 2.0 - alpha * pt.t, 1e-12);
        EXPECT_NEAR(pt.x, 2.0 * pt.t - 0.5 * alpha * pt.t * pt.t, 1e-10);
    }
}

TEST(Classical, LeavingTheDomainThrows) {
    EXPECT_THROW(classical_trajectory(0.0, 1.0, Potential::none(), 1.0, 10.0, 0.01, -1.0, 1.0), DomainError);
}

// From the turning point at x0 the orbit crosses both wells; the second
// zero of p closes one period.
TEST(Classical, QuarticPeriodMatchesQuadrature) {
    const Potential v = Potential::quartic(1.0, 2.0);
    const double kappa = 1.0, x0 = 1.6, dt = 1e-4;
    const double expected = classical_period(v, kappa, -x0, x0);
    const auto path = classical_trajectory(x0, 0.0, v, kappa, 1.5 * expected, dt, -3.0, 3.0);
    int crossings = 0;
    double period = 0.0;
    for (std::size_t i = 1; i < path.size() && crossings < 2; ++i) {
        const double a = path[i - 1].p, b = path[i].p;
        if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
            if (++crossings == 2) period = path[i - 1].t + dt * a / (a - b);
        }
    }
    ASSERT_EQ(crossings, 2);
    EXPECT_LE(std::abs(period - expected) / expected, 1e-4);
    const double e0 = classical_energy(x0, 0.0, v, kappa);
    for (std::size_t i = 0; i < path.size(); i += 1000) EXPECT_NEAR(classical_energy(path[i].x, path[i].p, v, kappa), e0, 1e-6);
}

TEST(Potential, SampledInterpolantTracksAnalytic) {
    const SpatialGrid g(1024, 10.0);
    const Potential exact = Potential::quartic(1.0, 2.0);
    const Potential sampled = Potential::sampled(exact.sample(g));
    for (double y : {-1.6, -0.3, 0.0, 0.77, 1.9}) {
        EXPECT_NEAR(sampled.value(y), exact.value(y), 1e-5);
        EXPECT_NEAR(sampled.gradient(y), exact.gradient(y), 1e-3);
    }
}
