#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "density.hpp"
#include "dynamics.hpp"
#include "grid.hpp"
#include "kernel.hpp"
#include "rng.hpp"

namespace pointerlab {

struct JumpEvent {
    double time;
    double q;
    double rate;
    double norm;
};

/// <e^{iqy}> = int |psi|^2 e^{iqy} dy.
inline complex characteristic(const ComplexField& field, double q) {
    const double dx = field.grid.spacing();
    // e^{iq y_j} built by recurrence from y_0 with periodic resets.
    const complex step = std::polar(1.0, q * dx);
    complex phase = std::polar(1.0, q * field.grid.position(0));
    complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < field.size(); ++j) {
        if (j % 64 == 0) phase = std::polar(1.0, q * field.grid.position(j));
        acc += std::norm(field.amplitudes[j]) * phase;
        phase *= step;
    }
    return acc * dx;
}

/// r_tot = gamma (1 - int dq G(q) |<e^{iqy}>|^2) by quadrature over the
/// kernel nodes (513 points over +-6 for the Gaussian).
inline double total_jump_rate(const ComplexField& field, const MomentumKernel& kernel) {
    double acc = 0.0;
    for (const auto& node : kernel.quadrature()) acc += node.weight * (1.0 - std::norm(characteristic(field, node.q)));
    return std::max(0.0, kernel.gamma() * acc);
}

/// Rate density r_q / gamma G(q) = 1 - |<e^{iqy}>|^2.
inline double jump_acceptance(const ComplexField& field, double q) { return 1.0 - std::norm(characteristic(field, q)); }

/// Orthogonal jump N_q (e^{iqy} - <e^{iqy}>) psi.
inline ComplexField apply_jump(const ComplexField& field, double q) {
    const complex chi = characteristic(field, q);
    const double weight = 1.0 - std::norm(chi);
    if (!(weight > 1e-12)) throw JumpUndefinedError("jump undefined: 1 - |<e^{iqy}>|^2 = " + std::to_string(weight));
    ComplexField out(field.grid);
    for (std::size_t j = 0; j < field.size(); ++j)
        out.amplitudes[j] = (std::polar(1.0, q * field.grid.position(j)) - chi) * field.amplitudes[j];
    normalize_in_place(out);
    return out;
}

/// Draws q with density proportional to G(q)(1 - |<e^{iqy}>|^2) by thinning:
/// propose from G, accept with probability 1 - |<e^{iqy}>|^2.
inline double sample_jump_momentum(const ComplexField& field, const MomentumKernel& kernel, RngStream& rng,
                                   std::size_t max_proposals = 10'000'000) {
    for (std::size_t i = 0; i < max_proposals; ++i) {
        const double q = kernel.sample(rng);
        if (rng.uniform() < jump_acceptance(field, q)) return q;
    }
    throw JumpUndefinedError("thinning found no admissible momentum transfer; the jump rate vanishes");
}

/// Independence Metropolis-Hastings alternative with proposal G; the chain
/// starts from a proposal and runs `burn_in` steps.
inline double sample_jump_momentum_mh(const ComplexField& field, const MomentumKernel& kernel, RngStream& rng,
                                      std::size_t burn_in = 200) {
    double q = kernel.sample(rng);
    double w = jump_acceptance(field, q);
    for (std::size_t i = 0; i < burn_in || !(w > 0.0); ++i) {
        if (i > burn_in + 100'000) throw JumpUndefinedError("MH chain found no admissible momentum transfer");
        const double cand = kernel.sample(rng);
        const double wc = jump_acceptance(field, cand);
        if (w <= 0.0 || rng.uniform() * w < wc) {
            q = cand;
            w = wc;
        }
    }
    return q;
}

struct UnravelingConfig {
    EvolutionConfig evolution;
    /// Times at which the state is stored (rounded to the step grid).
    std::vector<double> snapshot_times;
    std::size_t max_jumps = 1'000'000;
};

struct UnravelingTrajectory {
    ComplexField initial;
    std::vector<JumpEvent> events;
    ComplexField final_field;
    std::vector<ComplexField> snapshots;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    double max_jump_overlap = 0.0;
};

namespace detail {

inline std::vector<std::size_t> snapshot_steps(const std::vector<double>& times, double dt) {
    std::vector<std::size_t> steps;
    for (double t : times) steps.push_back(static_cast<std::size_t>(std::llround(t / dt)));
    std::sort(steps.begin(), steps.end());
    return steps;
}

}  // namespace detail

/// Piecewise-deterministic orthogonal unraveling: the nonlinear flow is
/// interrupted by orthogonal jumps when int r_tot dt reaches an Exp(1) draw.
/// The rate is evaluated at each step's mid-point density.
inline UnravelingTrajectory sample_trajectory(const ComplexField& initial, double t_max, const UnravelingConfig& config,
                                              RngStream& rng) {
    const auto& kernel = config.evolution.kernel;
    SplitStepper stepper(initial, config.evolution);
    UnravelingTrajectory out{initial, {}, initial, {}, rng.seed(), rng.stream_id()};
    const double dt = config.evolution.dt;
    const auto total = static_cast<std::size_t>(std::llround(t_max / dt));
    const auto snaps = detail::snapshot_steps(config.snapshot_times, dt);
    std::size_t next_snap = 0;
    while (next_snap < snaps.size() && snaps[next_snap] == 0) {
        out.snapshots.push_back(initial);
        ++next_snap;
    }
    const double gamma = kernel.gamma();
    double target = rng.exponential();
    double integrated = 0.0;
    for (std::size_t s = 1; s <= total; ++s) {
        stepper.step();
        if (gamma > 0.0) {
            const double rate = kernel.is_gaussian() ? gamma * (1.0 - stepper.last_a_psi())
                                                     : total_jump_rate(stepper.field(), kernel);
            integrated += std::max(0.0, rate) * dt;
            if (integrated >= target) {
                ComplexField& psi = stepper.mutable_field();
                const double q = sample_jump_momentum(psi, kernel, rng);
                ComplexField next = apply_jump(psi, q);
                out.max_jump_overlap = std::max(out.max_jump_overlap, std::abs(inner_product(psi, next)));
                psi = std::move(next);
                out.events.push_back({stepper.time(), q, rate, psi.norm_squared()});
                if (out.events.size() > config.max_jumps) throw TimeoutError("jump budget exhausted");
                target = rng.exponential();
                integrated = 0.0;
            }
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
