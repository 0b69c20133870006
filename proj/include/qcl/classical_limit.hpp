#pragma once

#include <string>
#include <vector>

#include "qcl/wwm.hpp"

namespace qcl {

// Thresholded region of a projector symbol, with normalized phase-space
// measure (full grid = 1).
struct Domain {
    PhaseSpaceGrid grid;
    std::vector<uint8_t> mask;   // row-major n_x * n_p
    double volume = 0.0;
    bool connected = false;
    long cell_count = 0;

    bool at(int i, int j) const { return mask[static_cast<size_t>(i) * grid.n_p + j] != 0; }
};

// Operator-convention symbol of an idempotent Hermitian projector
// (integral = 2 pi hbar rank); idempotency checked to idem_tol.
PhaseSpaceFunction projector_symbol(const Eigen::MatrixXcd& proj, const PhaseSpaceGrid& grid,
                                    double idem_tol = 1e-10);

// mask = (Re sym >= threshold); connectivity by 4-neighbor flood fill
// (non-periodic). Empty masks raise ContractError.
Domain characteristic_domain(const PhaseSpaceFunction& sym, double threshold = 0.5);

struct PartitionReport {
    Eigen::MatrixXd overlap_fraction;   // pairwise overlap / smaller volume
    std::vector<double> volumes;
    double total_volume = 0.0;
    bool disjoint = false;
    bool volume_bounded = false;
    std::vector<std::string> violations;
};

PartitionReport check_partition(const std::vector<Domain>& domains,
                                double overlap_tol = 0.01, double volume_tol = 1e-3);

struct Box {
    double center_x = 0.0, center_p = 0.0;
    double width_x = 0.0, width_p = 0.0;

    bool contains(double x, double p) const {
        return std::abs(x - center_x) <= 0.5 * width_x &&
               std::abs(p - center_p) <= 0.5 * width_p;
    }
};

// (1 / (wx wp)) * Riemann sum of f * rho over cells with centers in the box.
double box_average(const PhaseSpaceFunction& f, const PhaseSpaceFunction& rho, const Box& box);

// Harmonic action-angle pair attached to a nested-annulus domain family:
// Pi = (m w x^2 + p^2/(m w)) / 2, Phi = the conjugate polar angle with
// {Phi, Pi}_pb = +1. The family must be radially ordered level sets around
// the grid center; only this geometry is supported.
struct ActionAnglePair {
    PhaseSpaceFunction action;   // Pi
    PhaseSpaceFunction angle;    // Phi, values in (-pi, pi]
    double mass = 1.0, omega = 1.0;
    std::vector<double> levels;        // mean action per domain
    double bracket_residual = 0.0;     // max |{Phi,Pi}_fd - 1| off-center
};

ActionAnglePair action_angle_from_domains(const std::vector<Domain>& family,
                                          double mass, double omega,
                                          int center_exclusion_cells = 3);

// Time-sampled phase-space generator field aleph(x, p, t).
struct GeneratorField {
    std::vector<double> times;
    std::vector<PhaseSpaceFunction> fields;
};

struct EvolveOptions {
    int substeps = 4;    // RK4 steps per output interval
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> pi_bar;
    std::vector<double> phi_bar;   // unwrapped
};

// Forward characteristics of the flow x' = d(aleph)/dp, p' = -d(aleph)/dx
// seeded at the box cells; pi_bar / phi_bar are the Eq.-style box averages of
// the transported action and (per-cell unwrapped) angle labels, weighted by
// the optional state symbol at t = 0. Characteristics leaving the grid raise
// TrajectoryError with the exit time.
Trajectory evolve_phase_space(const GeneratorField& gen, const ActionAnglePair& pair,
                              const Box& init, const PhaseSpaceFunction* weight = nullptr,
                              const EvolveOptions& opt = {});

struct EquilibriumCriteria {
    double rate_fraction = 1e-3;   // threshold relative to the initial scales
    double window = 0.0;           // sustained-quiet window length (time units)
};

struct EquilibriumReport {
    bool reached = false;
    double time = 0.0;             // end of the first qualifying window
    double pi_rate_scale = 0.0;    // initial |dPi/dt| scale
    double phi_rate_scale = 0.0;
};

// Equilibrium when both |dPi_bar/dt| and |dPhi_bar/dt| stay below
// rate_fraction * (initial scale) over a full window. The initial scale is
// the first-window mean rate, floored by series-range / horizon so a flat
// coordinate cannot make the test vacuous.
EquilibriumReport trajectory_surfaces(const Trajectory& traj, const EquilibriumCriteria& crit);

} // namespace qcl
