#include "qcl/density_matrix.hpp"

#include <cmath>

#include "qcl/errors.hpp"

namespace qcl {

DensityMatrix DensityMatrix::validated(Eigen::MatrixXcd m, double herm_tol,
                                       double trace_tol, double psd_tol) {
    if (m.rows() != m.cols()) throw ContractError("DensityMatrix: not square");
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > herm_tol)
        throw ContractError("DensityMatrix: Hermiticity violated, residual " + std::to_string(herm));
    const double tr_err = std::abs(m.trace() - cplx(1.0, 0.0));
    if (tr_err > trace_tol)
        throw ContractError("DensityMatrix: trace deviates from 1 by " + std::to_string(tr_err));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitize(m), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -psd_tol)
        throw ContractError("DensityMatrix: negative eigenvalue " +
                            std::to_string(es.eigenvalues().minCoeff()));
    return DensityMatrix{std::move(m)};
}

Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m) {
    return 0.5 * (m + m.adjoint());
}

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitize(a - b), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

std::vector<Eigen::MatrixXcd> hermitian_basis(int dim) {
    std::vector<Eigen::MatrixXcd> basis;
    basis.reserve(static_cast<size_t>(dim) * dim);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dim));
    basis.push_back(Eigen::MatrixXcd::Identity(dim, dim) * inv_sqrt_d);
    const double s = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < dim; ++j) {
        for (int k = j + 1; k < dim; ++k) {
            Eigen::MatrixXcd re = Eigen::MatrixXcd::Zero(dim, dim);
            re(j, k) = s; re(k, j) = s;
            basis.push_back(re);
            Eigen::MatrixXcd im = Eigen::MatrixXcd::Zero(dim, dim);
            im(j, k) = cplx(0.0, -s); im(k, j) = cplx(0.0, s);
            basis.push_back(im);
        }
    }
    for (int l = 1; l < dim; ++l) {
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(dim, dim);
        const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
        for (int j = 0; j < l; ++j) d(j, j) = norm;
        d(l, l) = -static_cast<double>(l) * norm;
        basis.push_back(d);
    }
    return basis;
}

Eigen::MatrixXcd random_hermitian(int dim, std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = cplx(g(rng), g(rng));
    return hermitize(m);
}

Eigen::VectorXcd random_state(int dim, std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = cplx(g(rng), g(rng));
    v.normalize();
    return v;
}

} // namespace qcl
