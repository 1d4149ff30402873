#pragma once

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace pointerlab {

/// Coefficients c_i of a superposition of N non-overlapping packets at
/// positions x_i, with the pairwise rates F_ij = F(x_i - x_j).
struct CoefficientState {
    std::vector<complex> c;
    std::vector<double> x;
    Eigen::MatrixXd F;

    static CoefficientState make(std::vector<complex> c, std::vector<double> x, const MomentumKernel& kernel) {
        if (c.size() != x.size() || c.empty()) throw ConfigError("coefficients and positions must have equal, non-zero length");
        double n2 = 0.0;
        for (const auto& ci : c) n2 += std::norm(ci);
        if (std::abs(n2 - 1.0) > 1e-12) throw NormError("coefficient vector is not normalized");
        const auto n = static_cast<Eigen::Index>(c.size());
        CoefficientState s{std::move(c), std::move(x), Eigen::MatrixXd::Zero(n, n)};
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                s.F(i, j) = i == j ? 0.0 : kernel.localization_rate(s.x[static_cast<std::size_t>(i)] - s.x[static_cast<std::size_t>(j)]);
        return s;
    }

    std::size_t size() const noexcept { return c.size(); }

    std::vector<double> weights() const {
        std::vector<double> p(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) p[i] = std::norm(c[i]);
        return p;
    }
};

namespace detail {

inline double mean_rate(const Eigen::MatrixXd& F, const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j)
        for (std::size_t k = 0; k < p.size(); ++k)
            s += F(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * p[j] * p[k];
    return s;
}

inline complex weighted_phase(const std::vector<double>& p, const std::vector<double>& x, double q) {
    complex chi{0.0, 0.0};
    for (std::size_t i = 0; i < p.size(); ++i) chi += p[i] * std::polar(1.0, q * x[i]);
    return chi;
}

}  // namespace detail

/// dc_i/dt = -(sum_j F_ij |c_j|^2 - sum_jk F_jk |c_j|^2 |c_k|^2) c_i.
inline std::vector<complex> coefficient_derivative(const CoefficientState& state) {
    const auto p = state.weights();
    const double mean = detail::mean_rate(state.F, p);
    std::vector<complex> d(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < state.size(); ++j) row += state.F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * p[j];
        d[i] = -(row - mean) * state.c[i];
    }
    return d;
}

/// r_q = gamma G(q) (1 - |sum_j |c_j|^2 e^{iqx_j}|^2) for the Gaussian kernel.
inline double jump_rate(const CoefficientState& state, double q, const MomentumKernel& kernel) {
    const complex chi = detail::weighted_phase(state.weights(), state.x, q);
    return std::max(0.0, kernel.gamma() * kernel.density(q) * (1.0 - std::norm(chi)));
}

/// Closed form sum_jk F_jk |c_j|^2 |c_k|^2.
inline double total_rate(const CoefficientState& state) { return detail::mean_rate(state.F, state.weights()); }

/// int r_q dq by quadrature over the kernel nodes.
inline double total_rate_quadrature(const CoefficientState& state, const MomentumKernel& kernel) {
    const auto p = state.weights();
    double acc = 0.0;
    for (const auto& node : kernel.quadrature()) acc += node.weight * (1.0 - std::norm(detail::weighted_phase(p, state.x, node.q)));
    return kernel.gamma() * acc;
}

/// c_k <- N_q (e^{iqx_k} - sum_i |c_i|^2 e^{iqx_i}) c_k.
inline CoefficientState jump_redistribute(const CoefficientState& state, double q) {
    const complex chi = detail::weighted_phase(state.weights(), state.x, q);
    const double weight = 1.0 - std::norm(chi);
    if (!(weight > 1e-12)) throw JumpUndefinedError("coefficient jump undefined: rate vanishes for this state");
    CoefficientState out = state;
    double n2 = 0.0;
    for (std::size_t k = 0; k < state.size(); ++k) {
        out.c[k] = (std::polar(1.0, q * state.x[k]) - chi) * state.c[k];
        n2 += std::norm(out.c[k]);
    }
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& ck : out.c) ck *= scale;
    return out;
}

struct CoefficientOptions {
    bool jumps = true;
    /// Termination when max |c_i|^2 > 1 - threshold.
    double threshold = 1e-6;
    /// Timeout in units of 1/gamma.
    double timeout = 200.0;
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
};

struct TrajectoryOutcome {
    int index = -1;
    std::size_t jump_count = 0;
    std::vector<double> jump_times;
    std::vector<double> final_weights;
    double t_end = 0.0;
};

namespace detail {

/// Moduli flow d|c_i|/dt = -(sum_j F_ij |c_j|^2 - S)|c_i|; phases are
/// constant between jumps.
struct ModuliFlow {
    const Eigen::MatrixXd& F;
    void operator()(const std::vector<double>& r, std::vector<double>& dr, double) const {
        const std::size_t n = r.size();
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                mean += F(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * r[j] * r[j] * r[k] * r[k];
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * r[j] * r[j];
            dr[i] = -(row - mean) * r[i];
        }
    }
};

inline void renormalize(std::vector<double>& r) {
    double n2 = 0.0;
    for (double v : r) n2 += v * v;
    const double s = 1.0 / std::sqrt(n2);
    for (auto& v : r) v *= s;
}

inline int dominant(const std::vector<double>& r, double threshold) {
    for (std::size_t i = 0; i < r.size(); ++i)
        if (r[i] * r[i] > 1.0 - threshold) return static_cast<int>(i);
    return -1;
}

}  // namespace detail

/// Deterministic flow of the moduli from t0 to t1 with adaptive dopri5.
inline void integrate_moduli(const Eigen::MatrixXd& F, std::vector<double>& r, double t0, double t1,
                             const CoefficientOptions& opt) {
    namespace odeint = boost::numeric::odeint;
    if (!(t1 > t0)) return;
    auto stepper = odeint::make_controlled(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<std::vector<double>>());
    odeint::integrate_adaptive(stepper, detail::ModuliFlow{F}, r, t0, t1, std::min(0.1, t1 - t0));
    detail::renormalize(r);
}

/// One trajectory of the reduced process: the coefficient flow interrupted by
/// orthogonal jumps. Candidate jump times come from a Poisson process at the
/// envelope rate max F_jk and are accepted with probability r_tot/envelope.
inline TrajectoryOutcome sample_coefficient_trajectory(const CoefficientState& initial, const MomentumKernel& kernel,
                                                       RngStream& rng, const CoefficientOptions& opt = {}) {
    for (std::size_t i = 0; i < initial.size(); ++i)
        for (std::size_t j = i + 1; j < initial.size(); ++j)
            if (initial.x[i] == initial.x[j]) throw ConfigError("packet positions must be pairwise distinct");
    const double envelope = initial.F.maxCoeff();
    const double t_limit = opt.timeout / std::max(kernel.gamma(), std::numeric_limits<double>::min());

    std::vector<double> r(initial.size()), phase(initial.size());
    for (std::size_t i = 0; i < initial.size(); ++i) {
        r[i] = std::abs(initial.c[i]);
        phase[i] = std::arg(initial.c[i]);
    }
    TrajectoryOutcome out;
    double t = 0.0;
    auto finish = [&](int idx) {
        out.index = idx;
        out.t_end = t;
        out.final_weights.resize(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) out.final_weights[i] = r[i] * r[i];
        out.jump_count = out.jump_times.size();
        return out;
    };
    if (int idx = detail::dominant(r, opt.threshold); idx >= 0) return finish(idx);
    if (!(envelope > 0.0)) throw TimeoutError("all localization rates vanish; the flow never terminates");

    for (;;) {
        const double t_next = opt.jumps ? t + rng.exponential(envelope) : t + 1.0 / envelope;
        const double t_stop = std::min(t_next, t_limit);
        integrate_moduli(initial.F, r, t, t_stop, opt);
        t = t_stop;
        if (int idx = detail::dominant(r, opt.threshold); idx >= 0) return finish(idx);
        if (t >= t_limit) throw TimeoutError("coefficient trajectory did not reach a fixed point by t = " + std::to_string(t_limit));
        if (!opt.jumps) continue;

        std::vector<double> p(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) p[i] = r[i] * r[i];
        const double rate = detail::mean_rate(initial.F, p);
        if (rng.uniform() * envelope >= rate) continue;

        double q = 0.0;
        for (std::size_t tries = 0;; ++tries) {
            if (tries > 10'000'000) throw JumpUndefinedError("no admissible momentum transfer found");
            q = kernel.sample(rng);
            if (rng.uniform() < 1.0 - std::norm(detail::weighted_phase(p, initial.x, q))) break;
        }
        const complex chi = detail::weighted_phase(p, initial.x, q);
        double n2 = 0.0;
        std::vector<complex> c(r.size());
        for (std::size_t k = 0; k < r.size(); ++k) {
            c[k] = (std::polar(1.0, q * initial.x[k]) - chi) * std::polar(r[k], phase[k]);
            n2 += std::norm(c[k]);
        }
        for (std::size_t k = 0; k < r.size(); ++k) {
            r[k] = std::abs(c[k]) / std::sqrt(n2);
            phase[k] = std::arg(c[k]);
        }
        out.jump_times.push_back(t);
    }
}

struct N2Analytics {
    double mu_infinity;
    double prob_odd;
};

/// Integrated jump rate mu(inf) = -ln(1 - 2 p_min)/2 and the odd-jump
/// probability (1 - e^{-2 mu})/2 = p_min for the saturated N = 2 process.
inline N2Analytics n2_analytics(double c1_sq) {
    if (!(c1_sq > 0.0 && c1_sq < 1.0)) throw DomainError("c1_sq must lie in (0, 1)");
    if (c1_sq == 0.5) throw UnstableEquilibriumError("equal weights: the integrated rate diverges");
    const double p_min = std::min(c1_sq, 1.0 - c1_sq);
    const double mu = -0.5 * std::log(1.0 - 2.0 * p_min);
    return {mu, 0.5 * (1.0 - std::exp(-2.0 * mu))};
}

/// Weights uniform on the simplex (normalized Exp(1) draws), uniform phases.
inline std::vector<complex> simplex_sample(std::size_t n, RngStream& rng) {
    if (n < 2) throw ConfigError("simplex_sample needs N >= 2");
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) {
        v = rng.exponential();
        total += v;
    }
    std::vector<complex> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = std::polar(std::sqrt(w[i] / total), rng.phase());
    return c;
}

struct BasinCell {
    std::size_t i;
    std::size_t j;
    double p[3];
    int index;
    int argmax;
    bool boundary;
};

struct BasinMap {
    std::size_t resolution = 0;
    std::vector<BasinCell> cells;
    std::size_t interior = 0;
    std::size_t mismatches = 0;
    std::size_t stalled = 0;
};

namespace detail {

inline int strict_argmax(const double* p, std::size_t n) {
    int best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (p[i] > p[best]) best = static_cast<int>(i);
    for (std::size_t i = 0; i < n; ++i)
        if (static_cast<int>(i) != best && std::abs(p[i] - p[best]) < 1e-12) return -1;
    return best;
}

}  // namespace detail

/// Endpoint of the deterministic flow from weights p, or -1 if it stalls
/// before t_max.
inline int flow_endpoint(const Eigen::MatrixXd& F, const std::vector<double>& p, double t_max, double threshold = 1e-6) {
    CoefficientOptions opt;
    opt.threshold = threshold;
    std::vector<double> r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = std::sqrt(p[i]);
    double t = 0.0;
    double chunk = 1.0;
    while (t < t_max) {
        if (int idx = detail::dominant(r, threshold); idx >= 0) return idx;
        const double t1 = std::min(t + chunk, t_max);
        integrate_moduli(F, r, t, t1, opt);
        t = t1;
        chunk *= 2.0;
    }
    return detail::dominant(r, threshold);
}

/// Attracting index of the deterministic N = 3 flow on a resolution^2 grid of
/// (p1, p2) cell centres inside the simplex. Boundary cells (touching the
/// simplex edge or an argmax tie line) are flagged and left out of the counts.
inline BasinMap basin_map(const std::vector<double>& positions, const MomentumKernel& kernel, std::size_t resolution = 100,
                          double t_max = 1e6, unsigned threads = 1) {
    if (positions.size() != 3) throw ConfigError("basin_map expects three packet positions");
    const CoefficientState probe = CoefficientState::make({1.0, 0.0, 0.0}, positions, kernel);
    std::vector<std::pair<std::size_t, std::size_t>> sites;
    const double R = static_cast<double>(resolution);
    for (std::size_t i = 0; i < resolution; ++i)
        for (std::size_t j = 0; i + j + 1 < resolution; ++j) sites.emplace_back(i, j);

    BasinMap map;
    map.resolution = resolution;
    map.cells = parallel_map<BasinCell>(sites.size(), threads, [&](std::size_t s) {
        const auto [i, j] = sites[s];
        BasinCell cell{i, j, {(i + 0.5) / R, (j + 0.5) / R, 0.0}, -1, -1, false};
        cell.p[2] = 1.0 - cell.p[0] - cell.p[1];
        cell.argmax = detail::strict_argmax(cell.p, 3);
        for (int di = 0; di <= 1 && !cell.boundary; ++di)
            for (int dj = 0; dj <= 1; ++dj) {
                const double c[3] = {(i + di) / R, (j + dj) / R, 1.0 - (i + di) / R - (j + dj) / R};
                if (c[2] < 0.0 || detail::strict_argmax(c, 3) != cell.argmax) {
                    cell.boundary = true;
                    break;
                }
            }
        if (cell.argmax < 0) cell.boundary = true;
        cell.index = flow_endpoint(probe.F, {cell.p[0], cell.p[1], cell.p[2]}, t_max);
        return cell;
    });
    for (const auto& c : map.cells) {
        if (c.index < 0) ++map.stalled;
        if (c.boundary) continue;
        ++map.interior;
        if (c.index != c.argmax) ++map.mismatches;
    }
    return map;
}

}  // namespace pointerlab
