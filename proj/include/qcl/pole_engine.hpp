#pragma once

#include <optional>
#include <vector>

#include "qcl/spectral_density.hpp"

namespace qcl {

// Resonance z = omega - (i/2) gamma of the analytically continued resolvent.
struct ComplexPole {
    double omega = 0.0;
    double gamma = 0.0;        // decay width, >= 0

    cplx z() const { return {omega, -0.5 * gamma}; }
};

struct PoleCatalogue {
    std::vector<ComplexPole> poles;            // sorted by gamma ascending
    std::optional<ComplexPole> ladder_base;    // set when poles = n * base

    void validate() const;                     // ordering + ladder consistency
    double min_gamma() const;
};

enum class Sheet { first, second };

// Self-energy Sigma(z) = integral J(w') / (z - w') dw' over the support;
// sheet::second continues below the cut as Sigma_I(z) - 2 pi i J(z).
// The near-cut singular part is split off analytically
// (J(x0) log((z-a)/(z-b))) and the remainder integrated adaptively.
cplx self_energy(cplx z, const SpectralDensity& J, Sheet sheet, double quad_tol = 1e-12);

// Perturbative seed z = omega + PV Sigma(omega) - i pi J(omega).
cplx perturbative_pole_seed(const SpectralDensity& J, double omega, double quad_tol = 1e-12);

// Newton root of z - omega - Sigma_II(z) = 0 with central-difference
// derivative and damped steps on overshoot. Residual must reach tol.
ComplexPole find_pole(const SpectralDensity& J, double omega, cplx guess,
                      double tol = 1e-10, int max_iter = 100, double quad_tol = 1e-12);

// z_n = n z0, n = 1..n_max.
PoleCatalogue pole_ladder(const ComplexPole& z0, int n_max);

// t_R = hbar / min gamma; all-zero widths raise ContractError (unitary limit).
double relaxation_time(const PoleCatalogue& catalogue, double hbar);

// Flags late-time deviation of the survival decay from the exponential
// channel: local log-derivative of |A|^2 away from -gamma0/hbar by more than
// rel_tol. The long-time channel is only detected, never modeled.
struct KhalfinReport {
    bool detected = false;
    double onset_time = 0.0;
    std::vector<char> flagged;   // per interior sample
};

KhalfinReport khalfin_scan(const std::vector<double>& times,
                           const std::vector<double>& survival_prob,
                           double gamma0, double hbar, double rel_tol = 0.3);

} // namespace qcl
