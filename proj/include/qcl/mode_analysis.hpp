#pragma once

#include <vector>

#include "qcl/density_matrix.hpp"
#include "qcl/pole_engine.hpp"

namespace qcl {

// One decay channel of an expectation value:
// contribution(t) = amplitude * cos(freq t + phase) * exp(-gamma t / hbar).
// For freq == 0 the amplitude may be signed and the phase is 0.
struct DecayMode {
    double amplitude = 0.0;
    double phase = 0.0;
    double freq = 0.0;
    double gamma = 0.0;

    double initial_value() const { return amplitude * std::cos(phase); }
    double value(double t, double hbar) const {
        return amplitude * std::cos(freq * t + phase) * std::exp(-gamma * t / hbar);
    }
};

struct ModeDecomposition {
    double equilibrium = 0.0;
    std::vector<DecayMode> modes;   // sorted by (gamma, freq) ascending
    double hbar = 1.0;
    double residual_rms = 0.0;
    bool fit_warning = false;

    double value(double t) const;
};

struct FitModesOptions {
    bool fit_equilibrium = true;     // off: constant content becomes the
                                     // gamma = 0 catalogue mode, if present
    double residual_tol = 1e-3;      // fraction of the series range
};

// Linear least squares with (freq_i, gamma_i) pinned from the catalogue
// (freq = pole omega, gamma = pole gamma). Each freq > 0 mode contributes a
// cos/sin pair, freq == 0 modes a single exponential. The window must
// resolve at least one catalogue mode (3 periods of its oscillation or 5 of
// its decay times). Throws FitError when underdetermined; a residual above
// residual_tol * range only sets fit_warning.
ModeDecomposition fit_modes(const std::vector<double>& times,
                            const std::vector<double>& values,
                            const PoleCatalogue& catalogue, double hbar,
                            const FitModesOptions& opt = {});

struct EffectiveMode {
    double gamma_eff = 0.0;
    int slow_count = 0;                 // M
    std::vector<int> slow_indices;      // gamma_i <= gamma_eff (ties slow)
    std::vector<int> fast_indices;
};

// gamma_eff = sum a_i(0) gamma_i / sum a_i(0).
EffectiveMode effective_gamma(const ModeDecomposition& decomp);

// t_D = hbar / gamma_eff.
double decoherence_time(const EffectiveMode& eff, double hbar);

// Decay channels of expectation values are pole-pair differences
// z_n - conj(z_m): freq = (n - m) omega0, width = (n + m) gamma0 / 2, for
// sector indices 0 <= m <= n <= max_n, (n, m) != (0, 0). Duplicate
// (freq, gamma) pairs are merged; a one-excitation problem (max_n = 1) gets
// exactly the coherence channel (omega0, gamma0/2) and the population
// channel (0, gamma0).
PoleCatalogue expectation_mode_catalogue(const ComplexPole& z0, int max_n);

// Non-oscillatory ladder for |coherence| envelopes: gamma = n gamma0 for
// n = 0..n_max, freq = 0. The n = 0 entry carries the non-decaying part as a
// zero-width mode so the initial-rate weighted average of Eq.-type
// gamma_eff comes out right; fit with fit_equilibrium = false.
PoleCatalogue envelope_mode_catalogue(const ComplexPole& z0, int n_max);

// rho_PS(t): equilibrium plus the slow_count slowest modes of every
// observable in an exhaustive Hilbert-Schmidt-orthonormal Hermitian basis.
// The reconstruction is Hermitized, clipped to the PSD cone and trace
// renormalized; the Frobenius distance moved by the repair is reported.
DensityMatrix privileged_state(const std::vector<ModeDecomposition>& per_observable,
                               const std::vector<Eigen::MatrixXcd>& observables,
                               int slow_count, double t, double* repair_distance = nullptr);

struct MovingPreferredBasis {
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> frames;   // columns = basis vectors
    std::vector<Eigen::VectorXd> weights;   // matching eigenvalues
    std::vector<char> degenerate;           // continuity ambiguous at sample
    double gap_tol = 1e-8;
};

// Eigendecomposition per sample with continuity bookkeeping: columns are
// matched to the previous frame by maximal overlap, near-degenerate clusters
// are carried through by projecting the previous frame onto the cluster
// subspace (Loewdin orthonormalization), and phases are fixed so that
// <v(t_k)|v(t_{k+1})> is real positive.
MovingPreferredBasis moving_preferred_basis(const std::vector<double>& times,
                                            const std::vector<DensityMatrix>& series,
                                            double gap_tol = 1e-8);

struct GeneratorSeries {
    std::vector<double> times;              // interior sample times
    std::vector<Eigen::MatrixXcd> aleph;
    std::vector<char> valid;
    std::vector<double> hermiticity_residual;
};

enum class DegeneratePolicy {
    gap,                // generator undefined across degenerate samples
    parallel_transport  // keep the transported-section gauge everywhere
};

// aleph(t) = i hbar (dU/dt) U^+ with U(t) = F(t) F(0)^+, central differences
// on the interior samples; the anti-Hermitian part of (dU/dt)U^+ is kept and
// the symmetrization residual reported.
GeneratorSeries effective_generator(const MovingPreferredBasis& mpb, double hbar,
                                    DegeneratePolicy policy = DegeneratePolicy::gap);

// S_lin = tr(rho - rho^2).
double linear_entropy(const DensityMatrix& rho);

// dS/dt = -2 tr(rho drho/dt), central differences inside, one-sided ends.
std::vector<double> entropy_production(const std::vector<double>& times,
                                       const std::vector<DensityMatrix>& series);

} // namespace qcl
