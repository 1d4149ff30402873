#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "coefficients.hpp"
#include "density.hpp"
#include "dynamics.hpp"
#include "kernel.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "unraveling.hpp"

namespace pointerlab {

// Two-level dephasing model -------------------------------------------------

struct BlochState {
    double x = 0.0;
    double y = 0.0;
    double z = 1.0;

    double length() const { return std::sqrt(x * x + y * y + z * z); }
    void validate() const {
        if (length() > 1.0 + 1e-12) throw DomainError("Bloch vector longer than 1");
    }
    static BlochState from_angles(double theta, double phi) {
        return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
    }
    /// Tr[P_up rho].
    double up_probability() const { return 0.5 * (1.0 + z); }
};

/// a(t) = (e^{-2 gamma t} a_x, e^{-2 gamma t} a_y, a_z).
inline BlochState dephasing_solution(const BlochState& a0, double gamma, double t) {
    a0.validate();
    const double d = std::exp(-2.0 * gamma * t);
    return {d * a0.x, d * a0.y, a0.z};
}

/// Polar angle under theta' = -gamma sin(2 theta): tan theta decays as
/// e^{-2 gamma t}, so each hemisphere flows to its pole.
inline double dephasing_pointer_flow(double theta0, double gamma, double t) {
    if (!(theta0 >= 0.0 && theta0 <= std::numbers::pi)) throw DomainError("theta0 must lie in [0, pi]");
    const double half = 0.5 * std::numbers::pi;
    if (theta0 == half) return half;
    const double v = std::atan(std::tan(theta0) * std::exp(-2.0 * gamma * t));
    return theta0 < half ? v : std::numbers::pi + v;
}

/// The two-level model as a reduced coefficient process: kicks of +-q0 with
/// packets at 0 and pi/q0 give F_12 = 2 gamma and jumps e^{i q0 y} that act
/// as sigma_z up to a phase.
struct DephasingAnalogue {
    MomentumKernel kernel;
    CoefficientState state;
};

inline DephasingAnalogue dephasing_analogue(double theta0, double phi0, double gamma, double q0 = 1.0) {
    auto kernel = MomentumKernel::symmetric_atoms({{q0, 1.0}}, gamma);
    std::vector<complex> c{std::cos(0.5 * theta0), std::polar(std::sin(0.5 * theta0), phi0)};
    auto state = CoefficientState::make(std::move(c), {0.0, std::numbers::pi / q0}, kernel);
    return {std::move(kernel), std::move(state)};
}

// Collisional master equation on a grid -------------------------------------

/// Strang splitting of d rho/dt = -i[H, rho] - F(y - y') rho(y, y'): free
/// propagation by half steps on both indices around the exact incoherent
/// factor e^{-F(y_i - y_j) dt} combined with the potential phase.
class MasterEquationOracle {
public:
    MasterEquationOracle(const SpatialGrid& grid, const MomentumKernel& kernel, double kappa, double dt,
                         const std::optional<RealField>& potential = std::nullopt)
        : grid_(grid), dt_(dt) {
        if (grid.size() > GridDensityMatrix::max_points) throw GridError("oracle grids are limited to n <= 256");
        if (!(dt > 0.0)) throw ConfigError("oracle dt must be positive");
        if (!(kappa >= 0.0)) throw ConfigError("oracle kappa must be non-negative");
        const auto n = static_cast<Eigen::Index>(grid.size());
        half_ = propagator(grid, kappa, 0.5 * dt);
        full_ = propagator(grid, kappa, dt);
        factor_.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double s = grid.position(static_cast<std::size_t>(i)) - grid.position(static_cast<std::size_t>(j));
                double phase = 0.0;
                if (potential)
                    phase = -(potential->values[static_cast<std::size_t>(i)] - potential->values[static_cast<std::size_t>(j)]) * dt;
                factor_(i, j) = std::polar(std::exp(-kernel.localization_rate(s) * dt), phase);
            }
    }

    double dt() const noexcept { return dt_; }

    void step(GridDensityMatrix& rho) const {
        rho.matrix = half_ * rho.matrix * half_.adjoint();
        rho.matrix = rho.matrix.cwiseProduct(factor_);
        rho.matrix = half_ * rho.matrix * half_.adjoint();
    }

    /// Advances by round(t/dt) steps with fused half steps, then checks
    /// Hermiticity, trace and positivity.
    GridDensityMatrix evolve(GridDensityMatrix rho, double t) const {
        require_same_grid(grid_, rho.grid, "MasterEquationOracle");
        const auto steps = static_cast<std::size_t>(std::llround(t / dt_));
        if (steps > 0) {
            rho.matrix = half_ * rho.matrix * half_.adjoint();
            for (std::size_t s = 0; s < steps; ++s) {
                rho.matrix = rho.matrix.cwiseProduct(factor_);
                const auto& u = s + 1 == steps ? half_ : full_;
                rho.matrix = u * rho.matrix * u.adjoint();
            }
        }
        check(rho);
        rho.matrix = 0.5 * (rho.matrix + rho.matrix.adjoint()).eval();
        return rho;
    }

    static void check(const GridDensityMatrix& rho, double tol = 1e-10) {
        if (rho.hermiticity_error() > tol) throw OracleError("density matrix lost Hermiticity");
        if (std::abs(rho.trace() - 1.0) > tol) throw OracleError("density matrix trace drifted from 1");
        if (rho.min_eigenvalue() < -tol) throw OracleError("density matrix lost positivity");
    }

private:
    static Eigen::MatrixXcd propagator(const SpatialGrid& grid, double kappa, double dt) {
        const auto n = static_cast<Eigen::Index>(grid.size());
        Eigen::MatrixXcd u(n, n);
        if (kappa == 0.0) return Eigen::MatrixXcd::Identity(n, n);
        KineticPropagator k(grid, dt, kappa);
        std::vector<complex> col(grid.size());
        for (Eigen::Index j = 0; j < n; ++j) {
            std::fill(col.begin(), col.end(), complex{0.0, 0.0});
            col[static_cast<std::size_t>(j)] = 1.0;
            k.apply(col);
            for (Eigen::Index i = 0; i < n; ++i) u(i, j) = col[static_cast<std::size_t>(i)];
        }
        return u;
    }

    SpatialGrid grid_;
    double dt_;
    Eigen::MatrixXcd half_, full_, factor_;
};

/// Single Strang step of the master equation.
inline GridDensityMatrix master_equation_step(GridDensityMatrix rho, const MomentumKernel& kernel, double dt, double kappa,
                                              const std::optional<RealField>& potential = std::nullopt) {
    MasterEquationOracle(rho.grid, kernel, kappa, dt, potential).step(rho);
    MasterEquationOracle::check(rho);
    return rho;
}

// Quantum Monte Carlo unraveling --------------------------------------------

/// Standard jump unraveling: Schroedinger evolution (the -i gamma/2 part of
/// H_eff only rescales the norm) interrupted at Poisson rate gamma by kicks
/// e^{iqy} with q ~ G.
inline UnravelingTrajectory qmc_trajectory(const ComplexField& initial, double t_max, const UnravelingConfig& config,
                                           RngStream& rng) {
    const MomentumKernel& kernel = config.evolution.kernel;
    EvolutionConfig linear = config.evolution;
    linear.kernel = MomentumKernel::gaussian(0.0);
    SplitStepper stepper(initial, linear);
    UnravelingTrajectory out{initial, {}, initial, {}, rng.seed(), rng.stream_id()};
    const double dt = linear.dt;
    const auto total = static_cast<std::size_t>(std::llround(t_max / dt));
    const auto snaps = detail::snapshot_steps(config.snapshot_times, dt);
    std::size_t next_snap = 0;
    while (next_snap < snaps.size() && snaps[next_snap] == 0) {
        out.snapshots.push_back(initial);
        ++next_snap;
    }
    const double gamma = kernel.gamma();
    double next_jump = gamma > 0.0 ? rng.exponential(gamma) : std::numeric_limits<double>::infinity();
    for (std::size_t s = 1; s <= total; ++s) {
        stepper.step();
        const double t = static_cast<double>(s) * dt;
        while (next_jump <= t) {
            ComplexField& psi = stepper.mutable_field();
            const double q = kernel.sample(rng);
            for (std::size_t j = 0; j < psi.size(); ++j) psi.amplitudes[j] *= std::polar(1.0, q * psi.grid.position(j));
            out.events.push_back({t, q, gamma, psi.norm_squared()});
            if (out.events.size() > config.max_jumps) throw TimeoutError("jump budget exhausted");
            next_jump += rng.exponential(gamma);
        }
        while (next_snap < snaps.size() && snaps[next_snap] == s) {
            out.snapshots.push_back(stepper.field());
            ++next_snap;
        }
    }
    out.final_field = stepper.field();
    return out;
}

}  // namespace pointerlab
