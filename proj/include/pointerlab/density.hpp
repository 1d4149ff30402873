#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "grid.hpp"
#include "rng.hpp"

namespace pointerlab {

/// Density matrix on a grid, stored in the orthonormal basis
/// e_j = sqrt(dx) delta_j, so a pure state has entries dx psi_i conj(psi_j).
struct GridDensityMatrix {
    static constexpr std::size_t max_points = 256;

    SpatialGrid grid;
    Eigen::MatrixXcd matrix;

    explicit GridDensityMatrix(SpatialGrid g) : grid(g), matrix(Eigen::MatrixXcd::Zero(g.size(), g.size())) {
        if (g.size() > max_points) throw GridError("density matrices are limited to n <= 256 grid points");
    }

    static Eigen::VectorXcd basis_vector(const ComplexField& field) {
        const double s = std::sqrt(field.grid.spacing());
        Eigen::VectorXcd v(field.size());
        for (std::size_t j = 0; j < field.size(); ++j) v[static_cast<Eigen::Index>(j)] = s * field.amplitudes[j];
        return v;
    }

    static GridDensityMatrix pure(const ComplexField& field) {
        GridDensityMatrix rho(field.grid);
        const Eigen::VectorXcd v = basis_vector(field);
        rho.matrix = v * v.adjoint();
        return rho;
    }

    double trace() const { return matrix.trace().real(); }
    double purity() const { return (matrix * matrix).trace().real(); }
    double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }

    Eigen::VectorXd eigenvalues() const {
        const Eigen::MatrixXcd h = 0.5 * (matrix + matrix.adjoint());
        return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h, Eigen::EigenvaluesOnly).eigenvalues();
    }
    double min_eigenvalue() const { return eigenvalues().minCoeff(); }

    /// rho(y_i, y_j) in position units (divides out the basis scaling).
    complex kernel(std::size_t i, std::size_t j) const {
        return matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / grid.spacing();
    }
};

inline double trace_distance(const GridDensityMatrix& a, const GridDensityMatrix& b) {
    require_same_grid(a.grid, b.grid, "trace_distance");
    const Eigen::MatrixXcd d = a.matrix - b.matrix;
    const Eigen::MatrixXcd h = 0.5 * (d + d.adjoint());
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h, Eigen::EigenvaluesOnly).eigenvalues();
    return 0.5 * ev.cwiseAbs().sum();
}

/// Average of the projectors |psi_i><psi_i|.
inline GridDensityMatrix ensemble_density(const std::vector<ComplexField>& states) {
    if (states.empty()) throw OracleError("ensemble_density needs at least one state");
    GridDensityMatrix rho(states.front().grid);
    Eigen::VectorXcd v;
    for (const auto& s : states) {
        require_same_grid(rho.grid, s.grid, "ensemble_density");
        v = GridDensityMatrix::basis_vector(s);
        rho.matrix.noalias() += v * v.adjoint();
    }
    rho.matrix /= static_cast<double>(states.size());
    return rho;
}

/// Bootstrap estimate of the Monte Carlo error of an ensemble density in
/// trace distance: mean D(rho_resampled, rho_ensemble) over `resamples`.
inline double bootstrap_trace_error(const std::vector<ComplexField>& states, std::size_t resamples, RngStream& rng) {
    const GridDensityMatrix full = ensemble_density(states);
    std::vector<Eigen::VectorXcd> vecs;
    vecs.reserve(states.size());
    for (const auto& s : states) vecs.push_back(GridDensityMatrix::basis_vector(s));
    std::uniform_int_distribution<std::size_t> pick(0, states.size() - 1);
    double acc = 0.0;
    for (std::size_t b = 0; b < resamples; ++b) {
        GridDensityMatrix rho(full.grid);
        for (std::size_t i = 0; i < states.size(); ++i) {
            const auto& v = vecs[pick(rng.engine())];
            rho.matrix.noalias() += v * v.adjoint();
        }
        rho.matrix /= static_cast<double>(states.size());
        acc += trace_distance(rho, full);
    }
    return acc / static_cast<double>(resamples);
}

}  // namespace pointerlab
