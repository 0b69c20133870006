#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qcl/numerics.hpp"

namespace qcl {

// Phase-space conventions
// -----------------------
// Operators live on a uniform position grid x_i = x_min + i dx, i in [0, n_x),
// as matrices A with A(i, j) ~ <x_i|A|x_j> dx (so the identity operator is the
// identity matrix). The operator symbol is
//
//   A_W(x, p) = sum_r K(x, r dx) e^{i p r dx / hbar},
//
// where K(x, y) is the kernel at center x and separation y (= 2 Delta): even
// separations come straight from matrix entries, odd separations from an
// 8-point interpolation of the kernel along the center coordinate. The
// conjugate momentum grid therefore has n_p = 2 n_x points with
// dp = pi hbar / (n_x dx), covering the full Nyquist band. With these
// choices, for band-limited operators:
//   symb(I) = 1,      integral A_W dx dp = 2 pi hbar tr A,
//   state symbol rho_W = A_W / (2 pi hbar): normalized to 1,
//   integral rho_W O_W = tr(rho O),   tr rho^2 = 2 pi hbar integral rho_W^2.
// Wraparound is periodic; grids must keep the state's support away from the
// edges (checked for states via the boundary-mass test).
struct PhaseSpaceGrid {
    double x_min = 0.0, x_max = 0.0;
    double p_min = 0.0, p_max = 0.0;
    int n_x = 0, n_p = 0;
    double hbar = 1.0;

    double dx() const { return (x_max - x_min) / n_x; }
    double dp() const { return (p_max - p_min) / n_p; }
    double x(int i) const { return x_min + i * dx(); }
    double p(int j) const { return p_min + j * dp(); }
    double cell_area() const { return dx() * dp(); }
    double total_volume() const { return (x_max - x_min) * (p_max - p_min); }

    void validate() const;

    // True when the p axis matches the Wigner transform layout for this x axis.
    bool conjugate_layout() const;

    // Transform-ready grid: n_p = 2 n_x, p symmetric with dp = pi hbar/(n_x dx).
    static PhaseSpaceGrid conjugate(double x_min, double x_max, int n_x, double hbar);

    // Free rectangular grid for analytic phase-space fields.
    static PhaseSpaceGrid rectangular(double x_min, double x_max, double p_min, double p_max,
                                      int n_x, int n_p, double hbar);
};

struct PhaseSpaceFunction {
    PhaseSpaceGrid grid;
    Eigen::MatrixXcd values;   // n_x rows, n_p columns

    double integral() const;   // real part of the Riemann sum
    double abs_integral() const;
    double max_imag() const;
    PhaseSpaceFunction real_part() const;

    static PhaseSpaceFunction sample(const PhaseSpaceGrid& g,
                                     const std::function<cplx(double, double)>& f);
};

// Operator-convention Wigner symbol (symb(I) = 1, integral = 2 pi hbar tr).
PhaseSpaceFunction wigner_transform(const Eigen::MatrixXcd& op, const PhaseSpaceGrid& grid);

// State symbol A_W / (2 pi hbar); requires unit trace and small boundary mass.
PhaseSpaceFunction wigner_state(const Eigen::MatrixXcd& rho, const PhaseSpaceGrid& grid,
                                double boundary_tol = 1e-8);

// Inverse map on the same grid; exact on the even-separation content,
// interpolated on the odd one. weyl_quantize(wigner_transform(A)) = A for
// band-limited A. Checks a round-trip residual when check_aliasing is set.
Eigen::MatrixXcd weyl_quantize(const PhaseSpaceFunction& f, bool check_aliasing = false,
                               double aliasing_tol = 1e-6);

enum class DerivativeBackend { finite_difference, spectral };

struct StarOptions {
    int order = 4;                         // truncation K of the series in hbar
    DerivativeBackend backend = DerivativeBackend::finite_difference;
    bool check_smoothness = false;         // spectral backend: coefficient decay
};

// Truncated Groenewold-Moyal series
//   f * g = sum_{k<=K} (1/k!) (i hbar/2)^k Pi^k(f, g),
//   Pi^k(f,g) = sum_j (-1)^j C(k,j) (d_x^{k-j} d_p^j f)(d_x^j d_p^{k-j} g).
// The finite-difference backend is exact on polynomials of degree <= 8 and is
// the default; the spectral backend assumes periodic samples.
PhaseSpaceFunction star_product(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                const StarOptions& opt = {});

// (f*g - g*f)/(i hbar): only odd series orders contribute, so the bracket is
// assembled from them directly and is exactly antisymmetric.
PhaseSpaceFunction moyal_bracket(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                 const StarOptions& opt = {});

// {f, g} = f_x g_p - f_p g_x with the same derivative backend.
PhaseSpaceFunction poisson_bracket(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                   DerivativeBackend backend = DerivativeBackend::finite_difference);

// Riemann pairing integral rho_W O_W dx dp (= tr(rho O) for a state symbol
// against an operator symbol on compatible grids).
double trace_pairing(const PhaseSpaceFunction& state_symbol,
                     const PhaseSpaceFunction& op_symbol);

// X diagonal; P = weyl_quantize(p), the Toeplitz momentum consistent with the
// quantizer (its symbol reproduces the p ramp up to the kernel-tail
// truncation of the finite box, smallest at the box center).
Eigen::MatrixXcd position_operator(const PhaseSpaceGrid& grid);
Eigen::MatrixXcd momentum_operator(const PhaseSpaceGrid& grid);

// Oscillator eigenfunction samples scaled by sqrt(dx) (orthonormal vectors).
Eigen::VectorXd hermite_vector(const PhaseSpaceGrid& grid, int n, double mass, double omega);

// Coherent state on the grid from its truncated Fock expansion.
Eigen::VectorXcd coherent_vector(const PhaseSpaceGrid& grid, cplx alpha, double mass,
                                 double omega, int cutoff = 64);

// Projector onto oscillator levels n_lo..n_hi (inclusive).
Eigen::MatrixXcd fock_band_projector(const PhaseSpaceGrid& grid, int n_lo, int n_hi,
                                     double mass, double omega);

// Map a matrix given in the truncated Fock basis to the position grid.
Eigen::MatrixXcd fock_to_position(const Eigen::MatrixXcd& fock_matrix,
                                  const PhaseSpaceGrid& grid, double mass, double omega);

// Bipartite check that symb(O_S x I_E) environment-integrates to symb(O_S).
// Runs an explicit two-particle transform on sys_grid x env_grid; the
// normalization constant is calibrated on O_S = I and reused.
struct ReducedSymbolReport {
    double max_abs_error = 0.0;
    double normalization = 0.0;   // measured environment volume constant
    bool pass = false;
};

ReducedSymbolReport reduced_symbol_check(const Eigen::MatrixXcd& O_S,
                                         const PhaseSpaceGrid& sys_grid,
                                         const PhaseSpaceGrid& env_grid,
                                         double tol = 1e-6);

} // namespace qcl
