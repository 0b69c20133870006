#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace qcl {

using cplx = std::complex<double>;

// Finite-difference weights for the m-th derivative at x0 given stencil nodes
// (Fornberg's recurrence). order = 0 gives interpolation weights.
std::vector<double> fornberg_weights(double x0, const std::vector<double>& nodes, int order);

// Differentiate a sampled field along one axis (0 = rows/x, 1 = cols/p) with
// 8th-order centered stencils and one-sided closures of the same order.
// Exact on polynomials of degree <= 8.
Eigen::MatrixXcd fd_derivative(const Eigen::MatrixXcd& f, int axis, double spacing);

// Spectral (FFT) derivative along one axis; assumes periodic samples.
Eigen::MatrixXcd spectral_derivative(const Eigen::MatrixXcd& f, int axis, double spacing);

// Adaptive Simpson quadrature of a complex-valued integrand on [a, b].
cplx adaptive_simpson(const std::function<cplx(double)>& f, double a, double b,
                      double tol = 1e-12, int max_depth = 40);

// Least-squares slope of log(y) vs log(x); x, y > 0.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Unwrap an angle sequence so consecutive differences lie in (-pi, pi].
std::vector<double> unwrap_angles(const std::vector<double>& wrapped);

// Forward/inverse complex FFT, any length (Bluestein via Eigen's kissfft).
void fft(Eigen::VectorXcd& data, bool inverse);

// Uniform sample grid [t0, t1] with n points (n >= 2).
std::vector<double> linspace(double t0, double t1, int n);

// log-spaced samples between a and b (both > 0).
std::vector<double> logspace(double a, double b, int n);

} // namespace qcl
