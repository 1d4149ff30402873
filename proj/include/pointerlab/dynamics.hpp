#pragma once

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "grid.hpp"
#include "kernel.hpp"
#include "spectral.hpp"

namespace pointerlab {

/// External potential V(y) in units of hbar*gamma, with its gradient.
struct Potential {
    std::function<double(double)> value;
    std::function<double(double)> gradient;

    static Potential none() {
        return {[](double) { return 0.0; }, [](double) { return 0.0; }};
    }
    static Potential linear(double alpha) {
        return {[alpha](double y) { return alpha * y; }, [alpha](double) { return alpha; }};
    }
    /// V = a y^4 - b y^2.
    static Potential quartic(double a, double b) {
        return {[a, b](double y) { return a * y * y * y * y - b * y * y; },
                [a, b](double y) { return 4.0 * a * y * y * y - 2.0 * b * y; }};
    }
    static Potential harmonic(double stiffness) {
        return {[stiffness](double y) { return 0.5 * stiffness * y * y; },
                [stiffness](double y) { return stiffness * y; }};
    }
    /// Catmull-Rom interpolation of samples on a grid (interior only).
    static Potential sampled(const RealField& samples);

    RealField sample(const SpatialGrid& grid) const {
        RealField out(grid);
        for (std::size_t j = 0; j < grid.size(); ++j) out.values[j] = value(grid.position(j));
        return out;
    }
};

inline Potential Potential::sampled(const RealField& samples) {
    const auto grid = samples.grid;
    const auto v = samples.values;
    const double h = grid.spacing();
    const double y0 = grid.position(0);
    const std::size_t n = grid.size();
    auto locate = [=](double y) {
        const double s = (y - y0) / h;
        if (!(s >= 1.0 && s <= static_cast<double>(n) - 3.0))
            throw DomainError("sampled potential evaluated outside the interpolation range");
        const auto i = static_cast<std::size_t>(std::floor(s));
        return std::pair{i, s - static_cast<double>(i)};
    };
    auto value = [=](double y) {
        const auto [i, t] = locate(y);
        const double p0 = v[i - 1], p1 = v[i], p2 = v[i + 1], p3 = v[i + 2];
        return 0.5 * (2.0 * p1 + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t +
                      (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t);
    };
    auto gradient = [=](double y) {
        const auto [i, t] = locate(y);
        const double p0 = v[i - 1], p1 = v[i], p2 = v[i + 1], p3 = v[i + 2];
        return 0.5 * ((-p0 + p2) + 2.0 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t +
                      3.0 * (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t) / h;
    };
    return {value, gradient};
}

struct EvolutionConfig {
    double kappa = 1e-2;
    double dt = 1e-3;
    double t_max = 50.0;
    double convergence_tol = 1e-6;
    /// Interval in tau between convergence checks and track samples.
    double check_interval = 1.0;
    bool stop_when_converged = true;
    MomentumKernel kernel = MomentumKernel::gaussian(1.0);
    std::optional<RealField> potential;

    void validate(const SpatialGrid& grid) const {
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be positive and finite");
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (!(t_max >= 0.0)) throw ConfigError("t_max must be non-negative");
        if (!(convergence_tol > 0.0)) throw ConfigError("convergence_tol must be positive");
        if (!(check_interval > 0.0)) throw ConfigError("check_interval must be positive");
        const double q_max = grid.max_wavenumber();
        if (!(dt * kappa * q_max * q_max < 0.5))
            throw ConfigError("dt * kappa * q_max^2 = " + std::to_string(dt * kappa * q_max * q_max) +
                              " violates the stability bound 0.5");
        if (potential) require_same_grid(grid, potential->grid, "EvolutionConfig potential");
    }
};

/// Largest stable step for a grid, capped at `cap`.
inline double stable_dt(const SpatialGrid& grid, double kappa, double cap = 1e-2, double safety = 0.45) {
    const double q_max = grid.max_wavenumber();
    return std::min(cap, safety / (kappa * q_max * q_max));
}

struct TrackPoint {
    double t;
    double position;
    double momentum;
};

struct EvolutionResult {
    ComplexField final_field;
    bool converged = false;
    double convergence_time = std::numeric_limits<double>::quiet_NaN();
    double final_drift = std::numeric_limits<double>::quiet_NaN();
    double t_final = 0.0;
    std::size_t steps = 0;
    std::vector<TrackPoint> expectation_track;
    std::vector<double> drift_history;
};

struct Expectations {
    double position;
    double momentum;
    double momentum_imag_residue;
};

inline Expectations expectation_values(const ComplexField& field) {
    const double dx = field.grid.spacing();
    double x = 0.0;
    for (std::size_t j = 0; j < field.size(); ++j) x += field.grid.position(j) * std::norm(field.amplitudes[j]);
    const ComplexField d = spectral_derivative(field);
    complex p{0.0, 0.0};
    for (std::size_t j = 0; j < field.size(); ++j) p += std::conj(field.amplitudes[j]) * complex{0.0, -1.0} * d.amplitudes[j];
    p *= dx;
    return {x * dx, p.real(), p.imag()};
}

/// |psi| after translating the field so that <y> sits at the origin.
inline RealField comoving_modulus(const ComplexField& field) {
    const double x = expectation_values(field).position;
    return spectral_shift(field, -x).modulus();
}

/// Strang split stepper for
///   d_tau phi = (i kappa/2) phi'' + Lambda[|phi|^2] phi - i V phi.
/// One step is K(dt/2) N(dt) P(dt) K(dt/2). The trailing half kick is
/// deferred and fused with the next leading one; field() materializes it.
class SplitStepper {
public:
    SplitStepper(ComplexField initial, const EvolutionConfig& config)
        : psi_(std::move(initial)),
          config_(config),
          convolution_(config.kernel.sampled_characteristic(psi_.grid)),
          half_(psi_.grid.size()),
          full_(psi_.grid.size()),
          rho_(psi_.grid.size()),
          smeared_(psi_.grid.size()) {
        config_.validate(psi_.grid);
        const double n2 = psi_.norm_squared();
        if (std::abs(n2 - 1.0) > 1e-10) throw NormError("initial field is not normalized");
        for (std::size_t j = 0; j < psi_.size(); ++j) {
            const double q = psi_.grid.wavenumber(j);
            half_[j] = std::polar(1.0, -0.25 * config_.kappa * q * q * config_.dt);
            full_[j] = half_[j] * half_[j];
        }
        if (config_.potential) {
            potential_phase_.resize(psi_.size());
            for (std::size_t j = 0; j < psi_.size(); ++j)
                potential_phase_[j] = std::polar(1.0, -config_.potential->values[j] * config_.dt);
        }
    }

    void step() {
        auto& a = psi_.amplitudes;
        const std::size_t n = a.size();
        fft_forward(a);
        const auto& kick = pending_ ? full_ : half_;
        for (std::size_t j = 0; j < n; ++j) a[j] *= kick[j];
        fft_inverse(a);

        const double dx = psi_.grid.spacing();
        const double gamma = config_.kernel.gamma();
        if (gamma > 0.0) {
            for (std::size_t j = 0; j < n; ++j) rho_[j] = std::norm(a[j]);
            convolution_.apply(rho_.data(), smeared_.data(), work_);
            double mass = 0.0, overlap = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                mass += rho_[j];
                overlap += rho_[j] * smeared_[j];
            }
            a_psi_ = overlap / (mass * mass * dx);
            const double h = gamma * config_.dt;
            for (std::size_t j = 0; j < n; ++j) a[j] *= std::exp(h * (smeared_[j] / (mass * dx) - a_psi_));
        }
        if (!potential_phase_.empty())
            for (std::size_t j = 0; j < n; ++j) a[j] *= potential_phase_[j];

        double n2 = 0.0;
        for (const auto& v : a) n2 += std::norm(v);
        n2 *= dx;
        ++steps_;
        if (!std::isfinite(n2) || !(n2 > 0.0)) throw DivergenceError("non-finite field during split step", steps_);
        const double scale = 1.0 / std::sqrt(n2);
        for (auto& v : a) v *= scale;
        pending_ = true;
        t_ += config_.dt;
    }

    /// Field at the current step boundary.
    const ComplexField& field() {
        materialize();
        return psi_;
    }

    /// Mutable access for jumps; callers must leave the field normalized.
    ComplexField& mutable_field() {
        materialize();
        return psi_;
    }

    double time() const noexcept { return t_; }
    std::size_t steps() const noexcept { return steps_; }
    /// a_psi of the mid-step density of the last step.
    double last_a_psi() const noexcept { return a_psi_; }
    const EvolutionConfig& config() const noexcept { return config_; }

private:
    void materialize() {
        if (!pending_) return;
        auto& a = psi_.amplitudes;
        fft_forward(a);
        for (std::size_t j = 0; j < a.size(); ++j) a[j] *= half_[j];
        fft_inverse(a);
        pending_ = false;
    }

    ComplexField psi_;
    EvolutionConfig config_;
    ConvolutionOperator convolution_;
    std::vector<complex> half_, full_, potential_phase_, work_;
    std::vector<double> rho_, smeared_;
    bool pending_ = false;
    double t_ = 0.0;
    double a_psi_ = 0.0;
    std::size_t steps_ = 0;
};

inline EvolutionResult evolve_nonlinear(const ComplexField& initial, const EvolutionConfig& config) {
    SplitStepper stepper(initial, config);
    const auto total = static_cast<std::size_t>(std::llround(config.t_max / config.dt));
    const auto every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.check_interval / config.dt)));
    const double interval = static_cast<double>(every) * config.dt;

    EvolutionResult result{initial, false, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 0.0, 0, {}, {}};
    auto observe = [&](const ComplexField& f, double t) {
        const auto e = expectation_values(f);
        if (!std::isfinite(e.position) || !std::isfinite(e.momentum))
            throw DivergenceError("non-finite expectation values", stepper.steps());
        result.expectation_track.push_back({t, e.position, e.momentum});
    };
    observe(initial, 0.0);
    RealField previous = comoving_modulus(initial);

    for (std::size_t s = 1; s <= total; ++s) {
        stepper.step();
        if (s % every != 0 && s != total) continue;
        const ComplexField& f = stepper.field();
        observe(f, stepper.time());
        if (s % every != 0) break;
        RealField current = comoving_modulus(f);
        const double drift = l2_distance(current, previous) / interval;
        previous = std::move(current);
        result.drift_history.push_back(drift);
        result.final_drift = drift;
        if (drift < config.convergence_tol) {
            if (!result.converged) result.convergence_time = stepper.time();
            result.converged = true;
            if (config.stop_when_converged) break;
        } else {
            result.converged = false;
            result.convergence_time = std::numeric_limits<double>::quiet_NaN();
        }
    }
    result.final_field = stepper.field();
    result.t_final = stepper.time();
    result.steps = stepper.steps();
    return result;
}

struct PhasePoint {
    double t;
    double x;
    double p;
};

/// Kick-drift-kick leapfrog for H = kappa p^2/2 + V(y); samples every
/// `record_every` steps. Leaving [lower, upper] raises DomainError.
inline std::vector<PhasePoint> classical_trajectory(double x0, double p0, const Potential& potential, double kappa,
                                                    double t_max, double dt, double lower, double upper,
                                                    std::size_t record_every = 1) {
    if (!(dt > 0.0)) throw ConfigError("classical_trajectory: dt must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(t_max / dt));
    std::vector<PhasePoint> out{{0.0, x0, p0}};
    double x = x0, p = p0, force = -potential.gradient(x);
    for (std::size_t s = 1; s <= steps; ++s) {
        p += 0.5 * dt * force;
        x += dt * kappa * p;
        if (!(x >= lower && x <= upper))
            throw DomainError("classical trajectory left the domain at t = " + std::to_string(s * dt));
        force = -potential.gradient(x);
        p += 0.5 * dt * force;
        if (s % record_every == 0 || s == steps) out.push_back({static_cast<double>(s) * dt, x, p});
    }
    return out;
}

inline double classical_energy(double x, double p, const Potential& potential, double kappa) {
    return 0.5 * kappa * p * p + potential.value(x);
}

/// Period of the orbit between turning points x_lo < x_hi at energy
/// E = V(x_lo) = V(x_hi): T = 2 int dy / sqrt(2 kappa (E - V)).
inline double classical_period(const Potential& potential, double kappa, double x_lo, double x_hi) {
    const double energy = potential.value(x_hi);
    boost::math::quadrature::tanh_sinh<double> integrator;
    auto f = [&](double y) {
        const double k = energy - potential.value(y);
        return k > 0.0 ? 1.0 / std::sqrt(2.0 * kappa * k) : 0.0;
    };
    return 2.0 * integrator.integrate(f, x_lo, x_hi);
}

/// Grid and step defaults for relaxing onto the soliton at a given kappa.
struct SolitonGridChoice {
    SpatialGrid grid;
    double dt;
};

/// Lower estimate of the soliton width: the small-kappa Gaussian width
/// (kappa/2)^(1/4) with a correction that keeps it below the measured width
/// up to kappa = 1.
inline double soliton_width_estimate(double kappa) {
    return std::pow(0.5 * kappa, 0.25) * (1.0 + std::min(kappa, 1.0));
}

inline SolitonGridChoice soliton_grid(double kappa, double resolution = 16.0, double dt_cap = 1e-2) {
    const double width = soliton_width_estimate(kappa);
    const double size_law = 0.4 + kappa / 1.6;
    const double length = std::max(60.0 * std::max(size_law, width), 32.0);
    const double target = length * resolution / width;
    std::size_t n = 64;
    while (static_cast<double>(n) < target) n *= 2;
    SpatialGrid grid(n, length);
    return {grid, stable_dt(grid, kappa, dt_cap)};
}

/// Chirped Gaussian matching the small-kappa soliton: the stationary complex
/// width exponent of the harmonic approximation of Lambda near the centre.
inline ComplexField soliton_initial_guess(const SpatialGrid& grid, double kappa, double center = 0.0, double momentum = 0.0) {
    const complex exponent = std::polar(1.0, -0.25 * std::numbers::pi) / (2.0 * std::sqrt(kappa));
    return chirped_gaussian(grid, center, exponent, momentum);
}

struct SolitonRelaxation {
    EvolutionResult evolution;
    double kappa;
    double dt;
};

/// Relaxes the chirped Gaussian guess onto the soliton by running the flow.
inline SolitonRelaxation relax_to_soliton(double kappa, double tol = 1e-8, double t_max = 600.0,
                                          std::optional<SolitonGridChoice> choice = std::nullopt) {
    const SolitonGridChoice gc = choice ? *choice : soliton_grid(kappa);
    EvolutionConfig cfg;
    cfg.kappa = kappa;
    cfg.dt = gc.dt;
    cfg.t_max = t_max;
    cfg.convergence_tol = tol;
    auto result = evolve_nonlinear(soliton_initial_guess(gc.grid, kappa), cfg);
    return {std::move(result), kappa, gc.dt};
}

}  // namespace pointerlab
