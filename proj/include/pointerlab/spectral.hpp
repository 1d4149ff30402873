#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "grid.hpp"

namespace pointerlab {

namespace detail {

// FFTW planning is not thread-safe, execution on new arrays is. Plans are
// created once per size under a lock and executed through the new-array API.
class FftPlanPair {
public:
    explicit FftPlanPair(std::size_t n) : n_(n) {
        std::vector<complex> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, flags);
        backward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, flags);
        if (!forward_ || !backward_) throw GridError("FFTW failed to create a plan");
    }
    FftPlanPair(const FftPlanPair&) = delete;
    FftPlanPair& operator=(const FftPlanPair&) = delete;
    ~FftPlanPair() {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    void forward(complex* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(forward_, p, p);
    }
    void backward(complex* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(backward_, p, p);
    }
    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    fftw_plan forward_;
    fftw_plan backward_;
};

inline const FftPlanPair& plans_for(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<FftPlanPair>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<FftPlanPair>(n);
    return *slot;
}

}  // namespace detail

/// Unnormalized forward DFT in place: X_k = sum_j x_j e^{-2 pi i jk/n}.
inline void fft_forward(std::vector<complex>& data) { detail::plans_for(data.size()).forward(data.data()); }

/// Inverse DFT in place, normalized so that inverse(forward(x)) == x.
inline void fft_inverse(std::vector<complex>& data) {
    detail::plans_for(data.size()).backward(data.data());
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
}

/// Precomputed convolution with a real, origin-centred kernel sampled on the
/// grid (kernel value at displacement y_j stored at index j). Applying it to a
/// density gives (rho * K)(y_j) = dx sum_m rho_m K(y_j - y_m) on the circle.
class ConvolutionOperator {
public:
    explicit ConvolutionOperator(const RealField& kernel) : grid_(kernel.grid), spectrum_(kernel.grid.size()) {
        const std::size_t n = grid_.size();
        // Move the origin sample to index 0 before transforming.
        for (std::size_t j = 0; j < n; ++j) spectrum_[j] = kernel.values[(j + n / 2) % n];
        fft_forward(spectrum_);
        const double dx = grid_.spacing();
        for (auto& s : spectrum_) s *= dx;
    }

    const SpatialGrid& grid() const noexcept { return grid_; }

    void apply(const double* density, double* out, std::vector<complex>& work) const {
        const std::size_t n = grid_.size();
        work.resize(n);
        for (std::size_t j = 0; j < n; ++j) work[j] = density[j];
        fft_forward(work);
        for (std::size_t j = 0; j < n; ++j) work[j] *= spectrum_[j];
        fft_inverse(work);
        for (std::size_t j = 0; j < n; ++j) out[j] = work[j].real();
    }

    RealField apply(const RealField& density) const {
        require_same_grid(grid_, density.grid, "ConvolutionOperator");
        RealField out(grid_);
        std::vector<complex> work;
        apply(density.values.data(), out.values.data(), work);
        return out;
    }

private:
    SpatialGrid grid_;
    std::vector<complex> spectrum_;
};

/// Circular convolution of a density with an origin-centred kernel, scaled
/// by the grid spacing.
inline RealField periodic_convolve(const RealField& density, const RealField& kernel) {
    require_same_grid(density.grid, kernel.grid, "periodic_convolve");
    return ConvolutionOperator(kernel).apply(density);
}

/// Free propagator exp(-i kappa q^2 dt / 2) applied in momentum space.
class KineticPropagator {
public:
    KineticPropagator(const SpatialGrid& grid, double dt, double kappa) : grid_(grid), phase_(grid.size()) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double q = grid.wavenumber(j);
            phase_[j] = std::polar(1.0, -0.5 * kappa * q * q * dt);
        }
    }

    void apply(std::vector<complex>& amplitudes) const {
        fft_forward(amplitudes);
        for (std::size_t j = 0; j < phase_.size(); ++j) amplitudes[j] *= phase_[j];
        fft_inverse(amplitudes);
    }

    const SpatialGrid& grid() const noexcept { return grid_; }

private:
    SpatialGrid grid_;
    std::vector<complex> phase_;
};

inline ComplexField kinetic_half_step(ComplexField field, double dt, double kappa) {
    if (!(dt > 0.0)) throw ConfigError("kinetic_half_step: dt must be positive");
    KineticPropagator(field.grid, dt, kappa).apply(field.amplitudes);
    return field;
}

/// psi(y) -> psi(y - shift), exact for band-limited fields.
inline ComplexField spectral_shift(ComplexField field, double shift) {
    fft_forward(field.amplitudes);
    for (std::size_t j = 0; j < field.size(); ++j)
        field.amplitudes[j] *= std::polar(1.0 / static_cast<double>(field.size()), -field.grid.wavenumber(j) * shift);
    detail::plans_for(field.size()).backward(field.amplitudes.data());
    return field;
}

/// psi(y) -> psi(y) e^{i u y}.
inline ComplexField boost(ComplexField field, double momentum) {
    for (std::size_t j = 0; j < field.size(); ++j)
        field.amplitudes[j] *= std::polar(1.0, momentum * field.grid.position(j));
    return field;
}

/// d psi / dy by spectral differentiation. The Nyquist mode is dropped.
inline ComplexField spectral_derivative(ComplexField field) {
    const std::size_t n = field.size();
    fft_forward(field.amplitudes);
    for (std::size_t j = 0; j < n; ++j) {
        const double q = j == n / 2 ? 0.0 : field.grid.wavenumber(j);
        field.amplitudes[j] *= complex{0.0, q};
    }
    fft_inverse(field.amplitudes);
    return field;
}

}  // namespace pointerlab
