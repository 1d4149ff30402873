#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grid.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace pointerlab {

/// Dimensionless model parameter kappa = sigma_G^2 / (m hbar gamma). Positions
/// are measured in hbar/sigma_G, momenta in sigma_G, times in 1/gamma.
struct SimulationParams {
    double kappa = 1e-2;

    static SimulationParams from_dimensional(double gamma, double mass, double sigma_g, double hbar) {
        if (!(gamma > 0.0) || !(mass > 0.0) || !(sigma_g > 0.0) || !(hbar > 0.0))
            throw ConfigError("dimensional parameters must all be positive");
        SimulationParams p;
        p.kappa = sigma_g * sigma_g / (mass * hbar * gamma);
        p.validate();
        return p;
    }

    void validate() const {
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be positive and finite");
    }

    static double to_dimensionless_position(double x, double sigma_g, double hbar) { return sigma_g * x / hbar; }
    static double to_dimensionless_time(double t, double gamma) { return gamma * t; }
};

/// Even, normalized momentum-transfer distribution G(q) with its Fourier
/// transform Ghat(s) = int G(q) e^{iqs} dq and the localization rate
/// F(s) = gamma (1 - Ghat(s)). Either a unit Gaussian or a finite symmetric
/// set of atoms (q_i, w_i).
class MomentumKernel {
public:
    struct Node {
        double q;
        double weight;
    };

    static MomentumKernel gaussian(double gamma = 1.0) {
        MomentumKernel k(gamma);
        k.gaussian_ = true;
        return k;
    }

    /// Atoms at +-q with weight w/2 each; the weights must sum to one.
    static MomentumKernel symmetric_atoms(const std::vector<std::pair<double, double>>& q_and_weight, double gamma = 1.0) {
        MomentumKernel k(gamma);
        double total = 0.0;
        for (auto [q, w] : q_and_weight) {
            if (!(w > 0.0)) throw ConfigError("kernel atom weights must be positive");
            k.atoms_.push_back({q, 0.5 * w});
            k.atoms_.push_back({-q, 0.5 * w});
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("kernel atom weights must sum to 1");
        return k;
    }

    bool is_gaussian() const noexcept { return gaussian_; }
    double gamma() const noexcept { return gamma_; }

    /// Probability density G(q); only defined for the Gaussian kernel.
    double density(double q) const {
        if (!gaussian_) throw DomainError("MomentumKernel::density is undefined for an atomic kernel");
        return std::exp(-0.5 * q * q) / std::sqrt(2.0 * std::numbers::pi);
    }

    double characteristic(double s) const noexcept {
        if (gaussian_) return std::exp(-0.5 * s * s);
        double acc = 0.0;
        for (const auto& a : atoms_) acc += a.weight * std::cos(a.q * s);
        return acc;
    }

    double localization_rate(double s) const noexcept { return gamma_ * (1.0 - characteristic(s)); }

    /// Upper bound of F over all separations.
    double max_localization_rate() const noexcept {
        if (gaussian_) return gamma_;
        double w = 0.0;
        for (const auto& a : atoms_) w += a.weight;
        return 2.0 * gamma_ * w;
    }

    double sample(RngStream& rng) const {
        if (gaussian_) return rng.normal();
        double u = rng.uniform();
        for (const auto& a : atoms_) {
            if (u < a.weight) return a.q;
            u -= a.weight;
        }
        return atoms_.back().q;
    }

    /// Nodes for int dq G(q) f(q). Gaussian: trapezoid rule with `points`
    /// nodes over [-q_max, q_max]; atoms: the atoms themselves.
    std::vector<Node> quadrature(std::size_t points = 513, double q_max = 6.0) const {
        if (!gaussian_) return atoms_;
        std::vector<Node> nodes(points);
        const double h = 2.0 * q_max / static_cast<double>(points - 1);
        for (std::size_t i = 0; i < points; ++i) {
            const double q = -q_max + h * static_cast<double>(i);
            const double end = (i == 0 || i + 1 == points) ? 0.5 : 1.0;
            nodes[i] = {q, end * h * density(q)};
        }
        return nodes;
    }

    const std::vector<Node>& atoms() const noexcept { return atoms_; }

    /// Ghat sampled at the origin-centred grid positions.
    RealField sampled_characteristic(const SpatialGrid& grid) const {
        RealField out(grid);
        for (std::size_t j = 0; j < grid.size(); ++j) out.values[j] = characteristic(grid.position(j));
        return out;
    }

    RealField sampled_localization_rate(const SpatialGrid& grid) const {
        RealField out(grid);
        for (std::size_t j = 0; j < grid.size(); ++j) out.values[j] = localization_rate(grid.position(j));
        return out;
    }

private:
    explicit MomentumKernel(double gamma) : gamma_(gamma) {
        if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be non-negative and finite");
    }

    double gamma_;
    bool gaussian_ = false;
    std::vector<Node> atoms_;
};

/// F(s) for the unit Gaussian kernel.
inline double localization_rate(double s, double gamma = 1.0) { return gamma * (1.0 - std::exp(-0.5 * s * s)); }

/// Lambda[rho] = gamma (rho * Ghat - int rho (rho * Ghat)) together with the
/// constant a_psi = int rho (rho * Ghat).
struct LambdaResult {
    RealField lambda;
    double a_psi;
};

inline LambdaResult lambda_functional_with_constant(const RealField& density, const MomentumKernel& kernel) {
    const double mass = density.integral();
    if (std::abs(mass - 1.0) > 1e-10)
        throw NormError("lambda_functional: density integrates to " + std::to_string(mass) + ", expected 1");
    const RealField smeared = periodic_convolve(density, kernel.sampled_characteristic(density.grid));
    double a = 0.0;
    for (std::size_t j = 0; j < density.values.size(); ++j) a += density.values[j] * smeared.values[j];
    a *= density.grid.spacing();
    RealField lambda(density.grid);
    for (std::size_t j = 0; j < density.values.size(); ++j) lambda.values[j] = kernel.gamma() * (smeared.values[j] - a);
    return {std::move(lambda), a};
}

inline RealField lambda_functional(const RealField& density, const MomentumKernel& kernel) {
    return lambda_functional_with_constant(density, kernel).lambda;
}

}  // namespace pointerlab
