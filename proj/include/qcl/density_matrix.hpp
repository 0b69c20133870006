#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qcl/numerics.hpp"

namespace qcl {

// Finite-dimensional state: Hermitian, unit trace, positive semidefinite.
struct DensityMatrix {
    Eigen::MatrixXcd mat;

    int dim() const { return static_cast<int>(mat.rows()); }

    // Checks the invariants and throws ContractError on violation.
    static DensityMatrix validated(Eigen::MatrixXcd m, double herm_tol = 1e-12,
                                   double trace_tol = 1e-10, double psd_tol = 1e-10);

    // No checks; for intermediate results known to be valid by construction.
    static DensityMatrix unchecked(Eigen::MatrixXcd m) { return DensityMatrix{std::move(m)}; }
};

Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m);

// (1/2)||a - b||_1 for Hermitian a, b.
double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

// Hilbert-Schmidt orthonormal Hermitian basis of dim x dim matrices:
// identity/sqrt(d), real and imaginary off-diagonal pairs, diagonal
// (Gell-Mann-type) combinations. tr(B_a B_b) = delta_ab.
std::vector<Eigen::MatrixXcd> hermitian_basis(int dim);

Eigen::MatrixXcd random_hermitian(int dim, std::mt19937& rng);
Eigen::VectorXcd random_state(int dim, std::mt19937& rng);

} // namespace qcl
