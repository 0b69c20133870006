#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcl/classical_limit.hpp"
#include "qcl/friedrichs.hpp"
#include "qcl/io.hpp"
#include "qcl/mode_analysis.hpp"
#include "qcl/pole_engine.hpp"
#include "qcl/wwm.hpp"

namespace qcl::scenario {

struct BandConfig {
    std::string type = "flat";       // flat | parabolic
    double g = 0.05;
    double center = 1.0;
    double width = 2.0;
};

struct ModelConfig {
    double omega = 1.0;
    double hbar = 1.0;
    double mass = 1.0;
    int fock_cutoff = 16;
    int n_modes = 400;
    BandConfig band;
};

struct PairConfig {
    std::vector<double> L_values = {1.0, 2.0};
    double weight_a = 0.70710678118654752; // |a| of a|x1> + b|x2>, b from normalization
    std::string scaling = "omnes";          // omnes | textbook | halfsquare_over_hbar
    int envelope_ladder = 10;               // n_max of the envelope mode ladder
};

struct QubitConfig {
    double excited_weight = 0.08;   // |c1|^2 of the pure initial state
    double mixed_population = 0.3;  // mixed robustness variant
    double mixed_coherence = 0.21;
};

struct WignerStageConfig {
    int grid_n = 128;
    double x_half_width = 6.0;
    std::vector<double> snapshot_times = {0.0, 0.25, 1.0}; // units of t_R
};

struct TrajectoryConfig {
    double L = 2.6;
    double horizon = 3.2;           // units of t_R
    int samples = 161;
    double box_center_x = 1.8;
    double box_center_p = 0.0;
    double box_width_x = 1.0;
    double box_width_p = 1.0;
    int grid_n = 128;
    double half_width = 5.0;        // trajectory field box
};

struct ClassicalStageConfig {
    double hbar_small = 1e-3;
    int grid_n = 1024;
    double x_half_width = 0.9;
    std::vector<std::pair<double, double>> action_bands = {
        {0.03, 0.06}, {0.09, 0.12}, {0.15, 0.18}};
    TrajectoryConfig trajectory;
};

struct Tolerances {
    double equilibrium_rate_fraction = 1e-3;
    double equilibrium_window = 0.5;   // units of t_R
    double fit_residual = 1e-3;
};

struct ScenarioConfig {
    int schema_version = 1;
    std::string name = "scenario";
    ModelConfig model;
    PairConfig pair;
    QubitConfig qubit;
    WignerStageConfig wigner;
    ClassicalStageConfig classical;
    double evolve_horizon = 3.0;       // units of t_R
    int evolve_samples = 600;
    std::vector<std::string> outputs = {"poles", "survival", "envelope",
                                        "modes",  "entropy",  "wigner",
                                        "domains", "trajectory"};
    long seed = 1;
    std::vector<std::pair<std::string, std::vector<double>>> sweep;
    Tolerances tol;
};

struct ConfigIssue {
    std::string path;
    std::string message;
};

// Parses and validates; returns every violation found, never throws on bad
// input. A non-empty issue list means no config is returned.
std::optional<ScenarioConfig> validate_config(const std::string& text,
                                              std::vector<ConfigIssue>& issues);

std::string serialize_config(const ScenarioConfig& cfg);

struct Artifact {
    std::string name;
    size_t bytes = 0;
    uint32_t crc = 0;
};

struct StageResult {
    std::string stage;
    bool ok = false;
    std::string error;
};

struct RunResult {
    std::vector<Artifact> artifacts;
    std::vector<StageResult> stages;
    bool ok = true;
    std::string failed_stage;
};

// Executes the requested stages into out_dir and writes manifest.json last.
// A stage failure is recorded, later stages are skipped, partial artifacts
// stay on disk.
RunResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                       io::Format format = io::Format::csv);

// --- building blocks reused by the CLI and the acceptance suite ------------

struct PoleStage {
    SpectralDensity band;
    FriedrichsConfig model;
    ComplexPole z0;
    PoleCatalogue ladder;
    double t_relax = 0.0;
};

PoleStage pole_stage(const ScenarioConfig& cfg);

CoherentScaling parse_scaling(const std::string& s);

// Damped ladder generator: aleph(x, p, t) = w0' I(x,p) exp(-gamma_eff t/hbar)
// on the given grid, sampled at `times`.
GeneratorField damped_ladder_generator(const PhaseSpaceGrid& grid, double mass,
                                       double omega0p, double gamma_eff, double hbar,
                                       const std::vector<double>& times);

} // namespace qcl::scenario
