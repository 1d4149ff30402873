#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace pointerlab {

using complex = std::complex<double>;

/// Periodic 1-D grid in dimensionless position units. Sample j sits at
/// y_j = (j - n/2) * spacing, so the origin is index n/2 and the domain is
/// [-L/2, L/2).
class SpatialGrid {
public:
    SpatialGrid(std::size_t n_points, double length) : n_(n_points), length_(length) {
        if (n_ < 2 || (n_ & (n_ - 1)) != 0)
            throw GridError("grid size must be a power of two >= 2, got " + std::to_string(n_));
        if (!(length_ > 0.0) || !std::isfinite(length_))
            throw GridError("grid length must be positive and finite");
    }

    std::size_t size() const noexcept { return n_; }
    double length() const noexcept { return length_; }
    double spacing() const noexcept { return length_ / static_cast<double>(n_); }
    double momentum_spacing() const noexcept { return 2.0 * std::numbers::pi / length_; }
    double max_wavenumber() const noexcept { return std::numbers::pi / spacing(); }

    double position(std::size_t j) const noexcept {
        return (static_cast<double>(j) - static_cast<double>(n_ / 2)) * spacing();
    }

    // FFT ordering: 0, 1, ..., n/2-1, -n/2, ..., -1 in units of 2pi/L.
    double wavenumber(std::size_t j) const noexcept {
        const auto signed_index = j < n_ / 2 ? static_cast<double>(j)
                                             : static_cast<double>(j) - static_cast<double>(n_);
        return signed_index * momentum_spacing();
    }

    std::vector<double> positions() const {
        std::vector<double> out(n_);
        for (std::size_t j = 0; j < n_; ++j) out[j] = position(j);
        return out;
    }

    std::vector<double> wavenumbers() const {
        std::vector<double> out(n_);
        for (std::size_t j = 0; j < n_; ++j) out[j] = wavenumber(j);
        return out;
    }

    friend bool operator==(const SpatialGrid& a, const SpatialGrid& b) noexcept {
        return a.n_ == b.n_ && a.length_ == b.length_;
    }

private:
    std::size_t n_;
    double length_;
};

inline void require_same_grid(const SpatialGrid& a, const SpatialGrid& b, const char* where) {
    if (!(a == b)) throw GridError(std::string(where) + ": grid mismatch");
}

/// Real samples on a grid (densities, potentials, kernels).
struct RealField {
    SpatialGrid grid;
    std::vector<double> values;

    explicit RealField(SpatialGrid g) : grid(g), values(g.size(), 0.0) {}
    RealField(SpatialGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) throw GridError("RealField: sample count does not match grid");
    }

    double integral() const noexcept {
        double s = 0.0;
        for (double v : values) s += v;
        return s * grid.spacing();
    }
};

/// Complex amplitudes psi(y_j) on a grid.
struct ComplexField {
    SpatialGrid grid;
    std::vector<complex> amplitudes;

    explicit ComplexField(SpatialGrid g) : grid(g), amplitudes(g.size()) {}
    ComplexField(SpatialGrid g, std::vector<complex> a) : grid(g), amplitudes(std::move(a)) {
        if (amplitudes.size() != grid.size())
            throw GridError("ComplexField: sample count does not match grid");
    }

    std::size_t size() const noexcept { return amplitudes.size(); }

    double norm_squared() const noexcept {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return s * grid.spacing();
    }

    RealField density() const {
        RealField rho(grid);
        for (std::size_t j = 0; j < size(); ++j) rho.values[j] = std::norm(amplitudes[j]);
        return rho;
    }

    RealField modulus() const {
        RealField m(grid);
        for (std::size_t j = 0; j < size(); ++j) m.values[j] = std::abs(amplitudes[j]);
        return m;
    }
};

/// <a|b> by grid quadrature.
inline complex inner_product(const ComplexField& a, const ComplexField& b) {
    require_same_grid(a.grid, b.grid, "inner_product");
    complex s{0.0, 0.0};
    for (std::size_t j = 0; j < a.size(); ++j) s += std::conj(a.amplitudes[j]) * b.amplitudes[j];
    return s * a.grid.spacing();
}

inline void normalize_in_place(ComplexField& field) {
    const double n2 = field.norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw NormError("cannot normalize a field with norm^2 = " + std::to_string(n2));
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& a : field.amplitudes) a *= scale;
}

inline ComplexField normalize(ComplexField field) {
    normalize_in_place(field);
    return field;
}

/// L2 distance of two real fields on a common grid.
inline double l2_distance(const RealField& a, const RealField& b) {
    require_same_grid(a.grid, b.grid, "l2_distance");
    double s = 0.0;
    for (std::size_t j = 0; j < a.values.size(); ++j) {
        const double d = a.values[j] - b.values[j];
        s += d * d;
    }
    return std::sqrt(s * a.grid.spacing());
}

/// Normalized Gaussian packet exp(-(y-center)^2/(4 width^2) + i momentum y),
/// so `width` is the standard deviation of |psi|^2.
inline ComplexField gaussian_packet(const SpatialGrid& grid, double center, double width, double momentum = 0.0) {
    ComplexField f(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double y = grid.position(j);
        const double d = y - center;
        f.amplitudes[j] = std::exp(-d * d / (4.0 * width * width)) * std::polar(1.0, momentum * y);
    }
    return normalize(std::move(f));
}

/// Gaussian with a complex quadratic exponent exp(-A (y-center)^2 + i momentum y).
inline ComplexField chirped_gaussian(const SpatialGrid& grid, double center, complex exponent, double momentum = 0.0) {
    if (!(exponent.real() > 0.0)) throw ConfigError("chirped_gaussian: Re(A) must be positive");
    ComplexField f(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double y = grid.position(j);
        const double d = y - center;
        f.amplitudes[j] = std::exp(-exponent * d * d + complex{0.0, momentum * y});
    }
    return normalize(std::move(f));
}

}  // namespace pointerlab
