#pragma once

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dynamics.hpp"
#include "grid.hpp"
#include "kernel.hpp"
#include "parallel.hpp"

namespace pointerlab {

struct LinearFit {
    double slope;
    double intercept;
    double r_squared;
};

inline LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("degenerate abscissa in linear fit");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (intercept + slope * x[i]);
        ss_res += r * r;
    }
    return {slope, intercept, syy > 0.0 ? 1.0 - ss_res / syy : 1.0};
}

/// Relative amplitude window |psi|/max(|psi|) used for tail fits.
struct TailWindow {
    double lower = 1e-8;
    double upper = 1e-3;
};

/// Grid indices of one tail (side = +1 right, -1 left) inside the window,
/// walking outward from the peak.
inline std::vector<std::size_t> tail_indices(const ComplexField& field, int side, TailWindow window = {}) {
    const RealField mod = field.modulus();
    const auto& m = mod.values;
    const auto peak = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
    const double top = m[peak];
    std::vector<std::size_t> out;
    bool inside = false;
    double last = top;
    for (std::ptrdiff_t j = static_cast<std::ptrdiff_t>(peak); j >= 0 && j < static_cast<std::ptrdiff_t>(m.size()); j += side) {
        const auto idx = static_cast<std::size_t>(j);
        const double r = m[idx] / top;
        if (r <= window.upper && r >= window.lower) {
            if (inside && m[idx] > last) throw FitError("non-monotone tail inside the fit window");
            inside = true;
            out.push_back(idx);
            last = m[idx];
        } else if (inside) {
            if (r > window.upper) throw FitError("non-monotone tail inside the fit window");
            break;
        }
    }
    return out;
}

struct TailFit {
    double k;
    double r_squared;
    std::size_t points;
    double distance_min;
    double distance_max;
};

/// Regresses log|psi| against |y - <y>| over both tails in the window.
inline TailFit fit_exponential_tail(const ComplexField& field, TailWindow window = {}) {
    const double center = expectation_values(field).position;
    const RealField mod = field.modulus();
    const double top = *std::max_element(mod.values.begin(), mod.values.end());
    std::vector<double> d, lg;
    for (int side : {-1, 1}) {
        for (auto idx : tail_indices(field, side, window)) {
            d.push_back(std::abs(field.grid.position(idx) - center));
            lg.push_back(std::log(mod.values[idx] / top));
        }
    }
    if (d.size() < 20) throw FitError("tail window holds " + std::to_string(d.size()) + " points, need at least 20");
    const LinearFit fit = least_squares_line(d, lg);
    if (!(fit.slope < 0.0)) throw FitError("tail does not decay");
    return {-fit.slope, fit.r_squared, d.size(), *std::min_element(d.begin(), d.end()),
            *std::max_element(d.begin(), d.end())};
}

struct SolitonProfile {
    ComplexField field;
    double velocity = 0.0;
    double position = 0.0;
    double momentum = 0.0;
    double tail_exponent = 0.0;
    double tail_r_squared = 0.0;
    double sigma_pi = 0.0;
    double a_psi = 0.0;
};

inline double position_spread(const ComplexField& field) {
    const double m = expectation_values(field).position;
    double v = 0.0;
    for (std::size_t j = 0; j < field.size(); ++j) {
        const double d = field.grid.position(j) - m;
        v += d * d * std::norm(field.amplitudes[j]);
    }
    return std::sqrt(v * field.grid.spacing());
}

/// a_psi = int rho (rho * Ghat).
inline double a_psi_of(const ComplexField& field, const MomentumKernel& kernel = MomentumKernel::gaussian(1.0)) {
    return lambda_functional_with_constant(normalize(field).density(), kernel).a_psi;
}

/// Collects the shape data of a converged soliton. The velocity is kappa<p>.
inline SolitonProfile analyze_soliton(const ComplexField& field, double kappa, TailWindow window = {}) {
    SolitonProfile p{field};
    const auto e = expectation_values(field);
    p.position = e.position;
    p.momentum = e.momentum;
    p.velocity = kappa * e.momentum;
    const TailFit tf = fit_exponential_tail(field, window);
    p.tail_exponent = tf.k;
    p.tail_r_squared = tf.r_squared;
    p.sigma_pi = position_spread(field);
    p.a_psi = a_psi_of(field);
    return p;
}

struct PhaseSlopes {
    double measured_left;
    double measured_right;
    double predicted_left;
    double predicted_right;
};

/// Phase gradient of the tails against the exponential-tail balance
/// d(arg psi)/dy -> u +- a_psi/(kappa k) on the right/left, u = v/kappa.
inline PhaseSlopes asymptotic_phase_slope(const SolitonProfile& profile, double kappa, TailWindow window = {}) {
    if (!(profile.tail_exponent > 0.0) || !(profile.a_psi > 0.0))
        throw FitError("profile lacks a valid tail exponent or a_psi");
    auto measure = [&](int side) {
        auto idx = tail_indices(profile.field, side, window);
        if (idx.size() < 3) throw FitError("too few tail points for a phase slope");
        std::sort(idx.begin(), idx.end());
        std::vector<double> y, phase;
        double acc = std::arg(profile.field.amplitudes[idx.front()]);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (i > 0) {
                if (idx[i] != idx[i - 1] + 1) throw FitError("tail window is not contiguous");
                const double step = std::arg(profile.field.amplitudes[idx[i]] / profile.field.amplitudes[idx[i - 1]]);
                if (std::abs(step) > 0.9 * std::numbers::pi) throw FitError("phase unwrap failure between adjacent points");
                acc += step;
            }
            y.push_back(profile.field.grid.position(idx[i]));
            phase.push_back(acc);
        }
        return least_squares_line(y, phase).slope;
    };
    const double u = profile.velocity / kappa;
    const double offset = profile.a_psi / (kappa * profile.tail_exponent);
    return {measure(-1), measure(1), u - offset, u + offset};
}

/// sigma = a + kappa/(4a).
inline double size_model(double kappa, double a_loc) { return a_loc + kappa / (4.0 * a_loc); }

struct WidthPoint {
    double kappa;
    double sigma_pi;
    bool converged;
    double convergence_time;
    double final_drift;
};

struct WidthSweep {
    std::vector<WidthPoint> points;
    double a_loc = 0.0;
    double rms_relative = 0.0;
    std::size_t fitted_points = 0;
};

/// Least-squares a for sigma = a + kappa/(4a) over the converged points.
inline void fit_size_model(WidthSweep& sweep) {
    std::vector<const WidthPoint*> use;
    for (const auto& p : sweep.points)
        if (p.converged) use.push_back(&p);
    if (use.empty()) throw FitError("no converged widths to fit");
    auto sse = [&](double a) {
        double s = 0.0;
        for (const auto* p : use) {
            const double r = p->sigma_pi - size_model(p->kappa, a);
            s += r * r;
        }
        return s;
    };
    const auto best = boost::math::tools::brent_find_minima(sse, 1e-3, 10.0, 52);
    double mean = 0.0;
    for (const auto* p : use) mean += p->sigma_pi;
    mean /= static_cast<double>(use.size());
    sweep.a_loc = best.first;
    sweep.rms_relative = std::sqrt(best.second / static_cast<double>(use.size())) / mean;
    sweep.fitted_points = use.size();
}

/// Relaxes onto the soliton at each kappa (in parallel) and fits the size law.
/// Widths from non-converged runs are reported but excluded from the fit.
inline WidthSweep width_vs_kappa(const std::vector<double>& kappas, unsigned threads = 1, double tol = 1e-6,
                                 double t_max = 600.0, std::vector<ComplexField>* fields = nullptr) {
    std::vector<std::optional<ComplexField>> finals(kappas.size());
    WidthSweep sweep;
    sweep.points = parallel_map<WidthPoint>(kappas.size(), threads, [&](std::size_t i) {
        auto r = relax_to_soliton(kappas[i], tol, t_max);
        finals[i] = r.evolution.final_field;
        return WidthPoint{kappas[i], position_spread(r.evolution.final_field), r.evolution.converged,
                          r.evolution.convergence_time, r.evolution.final_drift};
    });
    if (fields)
        for (auto& f : finals) fields->push_back(std::move(*f));
    fit_size_model(sweep);
    return sweep;
}

/// max over q in [q_min, q_max] of |int |psi|^2 e^{iqy} dy - e^{iq<y>}|.
inline double point_like_phase_error(const ComplexField& field, double q_min, double q_max, std::size_t samples = 401) {
    const double m = expectation_values(field).position;
    const double dx = field.grid.spacing();
    double worst = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double q = q_min + (q_max - q_min) * static_cast<double>(i) / static_cast<double>(samples - 1);
        complex c{0.0, 0.0};
        for (std::size_t j = 0; j < field.size(); ++j)
            c += std::norm(field.amplitudes[j]) * std::polar(1.0, q * field.grid.position(j));
        worst = std::max(worst, std::abs(c * dx - std::polar(1.0, q * m)));
    }
    return worst;
}

}  // namespace pointerlab
