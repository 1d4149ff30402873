#include <gtest/gtest.h>

#include <pointerlab/grid.hpp>
#include <pointerlab/parallel.hpp>
#include <pointerlab/rng.hpp>
#include <pointerlab/spectral.hpp>

#include <cmath>
#include <numbers>
#include <set>

using namespace pointerlab;

namespace {

double gaussian(double y, double c, double s) { return std::exp(-0.5 * (y - c) * (y - c) / (s * s)); }

// Second moment of |psi|^2 about its mean.
double variance(const ComplexField& f) {
    const double dx = f.grid.spacing();
    double m = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double w = std::norm(f.amplitudes[j]) * dx;
        m += w * f.grid.position(j);
        m2 += w * f.grid.position(j) * f.grid.position(j);
    }
    return m2 - m * m;
}

}  // namespace

TEST(Grid, RejectsSizesThatAreNotPowersOfTwo) {
    EXPECT_THROW(SpatialGrid(100, 10.0), GridError);
    EXPECT_THROW(SpatialGrid(1, 10.0), GridError);
    EXPECT_THROW(SpatialGrid(64, -1.0), GridError);
    EXPECT_NO_THROW(SpatialGrid(64, 10.0));
}

TEST(Grid, PositionsAndWavenumbers) {
    const SpatialGrid g(8, 4.0);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.5);
    EXPECT_DOUBLE_EQ(g.position(4), 0.0);
    EXPECT_DOUBLE_EQ(g.position(0), -2.0);
    EXPECT_DOUBLE_EQ(g.wavenumber(1), 2.0 * std::numbers::pi / 4.0);
    EXPECT_DOUBLE_EQ(g.wavenumber(7), -2.0 * std::numbers::pi / 4.0);
    EXPECT_DOUBLE_EQ(g.wavenumber(4), -g.max_wavenumber());
}

TEST(Normalize, ScalesNormSquaredFourToOne) {
    const SpatialGrid g(128, 20.0);
    ComplexField f = gaussian_packet(g, 0.3, 1.0);
    ComplexField doubled = f;
    for (auto& a : doubled.amplitudes) a *= 2.0;
    ASSERT_NEAR(doubled.norm_squared(), 4.0, 1e-12);
    const ComplexField n = normalize(doubled);
    EXPECT_NEAR(n.norm_squared(), 1.0, 1e-14);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(std::abs(n.amplitudes[j] - f.amplitudes[j]), 0.0, 1e-14);
}

TEST(Normalize, IsIdempotent) {
    const SpatialGrid g(128, 20.0);
    const ComplexField f = gaussian_packet(g, -1.0, 0.7, 2.0);
    const ComplexField n = normalize(f);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LE(std::abs(n.amplitudes[j] - f.amplitudes[j]), 1e-14);
}

TEST(Normalize, ZeroFieldThrows) {
    ComplexField z(SpatialGrid(32, 4.0));
    EXPECT_THROW(normalize(z), NormError);
}

TEST(Fft, RoundTrip) {
    RngStream rng(3, 0);
    std::vector<complex> data(256);
    for (auto& d : data) d = {rng.normal(), rng.normal()};
    const auto original = data;
    fft_forward(data);
    fft_inverse(data);
    for (std::size_t j = 0; j < data.size(); ++j) EXPECT_LE(std::abs(data[j] - original[j]), 1e-13);
}

TEST(Convolution, DeltaDensityRecentresKernel) {
    const SpatialGrid g(128, 16.0);
    RealField kernel(g), delta(g);
    for (std::size_t j = 0; j < g.size(); ++j) kernel.values[j] = gaussian(g.position(j), 0.0, 1.0);
    const std::size_t at = 40;
    delta.values[at] = 1.0 / g.spacing();
    const RealField out = periodic_convolve(delta, kernel);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t k = (i + g.size() - at + g.size() / 2) % g.size();
        EXPECT_NEAR(out.values[i], kernel.values[k], 1e-12);
    }
}

TEST(Convolution, UniformDensityGivesLevelTimesKernelIntegral) {
    const SpatialGrid g(128, 30.0);
    RealField kernel(g), uniform(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
        kernel.values[j] = gaussian(g.position(j), 0.0, 1.0) / std::sqrt(2.0 * std::numbers::pi);
        uniform.values[j] = 0.25;
    }
    const double integral = kernel.integral();
    const RealField out = periodic_convolve(uniform, kernel);
    for (double v : out.values) EXPECT_NEAR(v, 0.25 * integral, 1e-12);
}

TEST(Convolution, MatchesDirectSum) {
    const SpatialGrid g(256, 24.0);
    RealField kernel(g), rho(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
        kernel.values[j] = gaussian(g.position(j), 0.0, 1.0);
        rho.values[j] = 0.7 * gaussian(g.position(j), -3.0, 0.6) + 0.3 * gaussian(g.position(j), 2.5, 0.9);
    }
    const RealField fast = periodic_convolve(rho, kernel);
    const double dx = g.spacing();
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) {
        double direct = 0.0;
        for (std::size_t m = 0; m < n; ++m) direct += rho.values[m] * kernel.values[(i + n - m + n / 2) % n];
        EXPECT_NEAR(fast.values[i], dx * direct, 1e-12);
    }
}

TEST(Convolution, GridMismatchThrows) {
    RealField a(SpatialGrid(64, 10.0)), b(SpatialGrid(64, 12.0));
    EXPECT_THROW(periodic_convolve(a, b), GridError);
}

TEST(Kinetic, PlaneWaveAcquiresPhaseOnly) {
    const SpatialGrid g(64, 10.0);
    const double q = g.wavenumber(5), kappa = 0.3, dt = 0.2;
    ComplexField f(g);
    for (std::size_t j = 0; j < g.size(); ++j) f.amplitudes[j] = std::polar(1.0, q * g.position(j));
    const ComplexField out = kinetic_half_step(f, dt, kappa);
    const complex factor = std::polar(1.0, -0.5 * kappa * q * q * dt);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LE(std::abs(out.amplitudes[j] - factor * f.amplitudes[j]), 1e-12);
}

TEST(Kinetic, ZeroKappaIsIdentity) {
    const SpatialGrid g(64, 10.0);
    const ComplexField f = gaussian_packet(g, 1.0, 0.8, 1.5);
    const ComplexField out = kinetic_half_step(f, 0.5, 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LE(std::abs(out.amplitudes[j] - f.amplitudes[j]), 1e-13);
}

TEST(Kinetic, NonPositiveStepThrows) {
    const ComplexField f = gaussian_packet(SpatialGrid(64, 10.0), 0.0, 1.0);
    EXPECT_THROW(kinetic_half_step(f, 0.0, 1.0), ConfigError);
}

// Free spreading of a Gaussian: Var(t) = s^2 + (kappa t / (2 s))^2.
TEST(Kinetic, GaussianDispersionMatchesAnalyticVariance) {
    const SpatialGrid g(1024, 80.0);
    const double s = 1.0, kappa = 0.5, dt = 0.02;
    ComplexField f = gaussian_packet(g, 0.0, s);
    const KineticPropagator k(g, dt, kappa);
    for (int i = 0; i < 100; ++i) k.apply(f.amplitudes);
    const double t = 100 * dt;
    const double expected = s * s + std::pow(kappa * t / (2.0 * s), 2);
    EXPECT_LE(std::abs(variance(f) - expected) / expected, 1e-6);
}

TEST(Spectral, ShiftAndBoost) {
    const SpatialGrid g(256, 32.0);
    const ComplexField f = gaussian_packet(g, 0.0, 1.0);
    const ComplexField shifted = spectral_shift(f, 2.5);
    const ComplexField ref = gaussian_packet(g, 2.5, 1.0);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LE(std::abs(shifted.amplitudes[j] - ref.amplitudes[j]), 1e-12);
    const ComplexField b = boost(f, 1.5);
    const ComplexField ref_b = gaussian_packet(g, 0.0, 1.0, 1.5);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LE(std::abs(b.amplitudes[j] - ref_b.amplitudes[j]), 1e-12);
}

TEST(Spectral, DerivativeOfGaussian) {
    const SpatialGrid g(256, 32.0);
    ComplexField f(g);
    for (std::size_t j = 0; j < g.size(); ++j) f.amplitudes[j] = gaussian(g.position(j), 0.0, 1.0);
    const ComplexField d = spectral_derivative(f);
    for (std::size_t j = 0; j < g.size(); ++j)
        EXPECT_NEAR(d.amplitudes[j].real(), -g.position(j) * gaussian(g.position(j), 0.0, 1.0), 1e-10);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
    RngStream a(7, 1), b(7, 1), c(7, 2), d(8, 1);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_NE(RngStream(7, 1).uniform(), c.uniform());
    EXPECT_NE(RngStream(7, 1).uniform(), d.uniform());
    RngStream e(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const double u = e.uniform();
        EXPECT_GT(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Parallel, MapIsIndependentOfThreadCount) {
    auto task = [](std::size_t i) {
        RngStream r(5, i);
        return r.normal();
    };
    const auto one = parallel_map<double>(200, 1, task);
    const auto four = parallel_map<double>(200, 4, task);
    EXPECT_EQ(one, four);
}

TEST(Parallel, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(50, 3,
                              [](std::size_t i) {
                                  if (i == 17) throw DomainError("boom");
                              }),
                 DomainError);
}
