#include "qcl/scenario.hpp"

#include <cmath>

#include <json.hpp>

#include "qcl/errors.hpp"

namespace qcl::scenario {

using nlohmann::json;

CoherentScaling parse_scaling(const std::string& s) {
    if (s == "omnes") return CoherentScaling::omnes;
    if (s == "textbook") return CoherentScaling::textbook;
    if (s == "halfsquare_over_hbar") return CoherentScaling::halfsquare_over_hbar;
    throw ConfigError("unknown coherent scaling '" + s + "'");
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

void check(bool ok, const std::string& path, const std::string& msg,
           std::vector<ConfigIssue>& issues) {
    if (!ok) issues.push_back({path, msg});
}

const std::vector<std::string>& known_outputs() {
    static const std::vector<std::string> v = {"poles",   "survival", "envelope",
                                               "modes",   "entropy",  "wigner",
                                               "domains", "trajectory"};
    return v;
}

const std::vector<std::string>& sweepable_paths() {
    static const std::vector<std::string> v = {"pair.L", "model.band.g",
                                               "classical.hbar_small"};
    return v;
}

} // namespace

std::optional<ScenarioConfig> validate_config(const std::string& text,
                                              std::vector<ConfigIssue>& issues) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        issues.push_back({"", std::string("invalid JSON: ") + e.what()});
        return std::nullopt;
    }
    if (!j.is_object()) {
        issues.push_back({"", "top level must be an object"});
        return std::nullopt;
    }

    ScenarioConfig cfg;
    try {
        read_field(j, "schema_version", cfg.schema_version);
        check(cfg.schema_version == 1, "schema_version", "unsupported schema version", issues);
        read_field(j, "name", cfg.name);
        if (!j.contains("model")) {
            issues.push_back({"model", "model missing"});
        } else {
            const json& m = j.at("model");
            read_field(m, "omega", cfg.model.omega);
            read_field(m, "hbar", cfg.model.hbar);
            read_field(m, "mass", cfg.model.mass);
            read_field(m, "fock_cutoff", cfg.model.fock_cutoff);
            read_field(m, "n_modes", cfg.model.n_modes);
            if (m.contains("band")) {
                const json& b = m.at("band");
                read_field(b, "type", cfg.model.band.type);
                read_field(b, "g", cfg.model.band.g);
                read_field(b, "center", cfg.model.band.center);
                read_field(b, "width", cfg.model.band.width);
            }
            check(cfg.model.hbar > 0.0, "model.hbar", "hbar must be positive", issues);
            check(cfg.model.mass > 0.0, "model.mass", "mass must be positive", issues);
            check(cfg.model.fock_cutoff >= 1, "model.fock_cutoff", "fock_cutoff must be >= 1",
                  issues);
            check(cfg.model.n_modes >= 1, "model.n_modes", "n_modes must be >= 1", issues);
            check(cfg.model.band.type == "flat" || cfg.model.band.type == "parabolic",
                  "model.band.type", "unknown band type", issues);
            check(cfg.model.band.g >= 0.0, "model.band.g", "coupling must be >= 0", issues);
            check(cfg.model.band.width > 0.0, "model.band.width", "width must be positive",
                  issues);
        }
        if (j.contains("pair")) {
            const json& p = j.at("pair");
            read_field(p, "L_values", cfg.pair.L_values);
            read_field(p, "weight_a", cfg.pair.weight_a);
            read_field(p, "scaling", cfg.pair.scaling);
            read_field(p, "envelope_ladder", cfg.pair.envelope_ladder);
            check(!cfg.pair.L_values.empty(), "pair.L_values", "need at least one L", issues);
            for (double L : cfg.pair.L_values)
                check(L > 0.0, "pair.L_values", "separations must be positive", issues);
            check(cfg.pair.weight_a > 0.0 && cfg.pair.weight_a < 1.0, "pair.weight_a",
                  "weight must be in (0, 1)", issues);
            check(cfg.pair.envelope_ladder >= 1, "pair.envelope_ladder", "need >= 1", issues);
            try {
                parse_scaling(cfg.pair.scaling);
            } catch (const ConfigError&) {
                issues.push_back({"pair.scaling", "unknown scaling"});
            }
        }
        if (j.contains("qubit")) {
            const json& q = j.at("qubit");
            read_field(q, "excited_weight", cfg.qubit.excited_weight);
            read_field(q, "mixed_population", cfg.qubit.mixed_population);
            read_field(q, "mixed_coherence", cfg.qubit.mixed_coherence);
            check(cfg.qubit.excited_weight > 0.0 && cfg.qubit.excited_weight < 1.0,
                  "qubit.excited_weight", "must be in (0, 1)", issues);
            const double w = cfg.qubit.mixed_population, c = cfg.qubit.mixed_coherence;
            check(w > 0.0 && w < 1.0, "qubit.mixed_population", "must be in (0, 1)", issues);
            check(c * c <= w * (1.0 - w), "qubit.mixed_coherence",
                  "coherence violates positivity", issues);
        }
        if (j.contains("wigner")) {
            const json& w = j.at("wigner");
            read_field(w, "grid_n", cfg.wigner.grid_n);
            read_field(w, "x_half_width", cfg.wigner.x_half_width);
            read_field(w, "snapshot_times", cfg.wigner.snapshot_times);
            check(cfg.wigner.grid_n >= 16, "wigner.grid_n", "grid too small", issues);
            check(cfg.wigner.x_half_width > 0.0, "wigner.x_half_width", "must be positive",
                  issues);
        }
        if (j.contains("classical")) {
            const json& c = j.at("classical");
            read_field(c, "hbar_small", cfg.classical.hbar_small);
            read_field(c, "grid_n", cfg.classical.grid_n);
            read_field(c, "x_half_width", cfg.classical.x_half_width);
            if (c.contains("action_bands")) {
                cfg.classical.action_bands.clear();
                for (const auto& b : c.at("action_bands"))
                    cfg.classical.action_bands.emplace_back(b.at(0).get<double>(),
                                                            b.at(1).get<double>());
            }
            check(cfg.classical.hbar_small > 0.0, "classical.hbar_small", "must be positive",
                  issues);
            check(cfg.classical.grid_n >= 16, "classical.grid_n", "grid too small", issues);
            for (const auto& [lo, hi] : cfg.classical.action_bands)
                check(0.0 < lo && lo < hi, "classical.action_bands",
                      "bands must be increasing positive intervals", issues);
            if (c.contains("trajectory")) {
                const json& t = c.at("trajectory");
                auto& tc = cfg.classical.trajectory;
                read_field(t, "L", tc.L);
                read_field(t, "horizon", tc.horizon);
                read_field(t, "samples", tc.samples);
                read_field(t, "box_center_x", tc.box_center_x);
                read_field(t, "box_center_p", tc.box_center_p);
                read_field(t, "box_width_x", tc.box_width_x);
                read_field(t, "box_width_p", tc.box_width_p);
                read_field(t, "grid_n", tc.grid_n);
                read_field(t, "half_width", tc.half_width);
                check(tc.L > 0.0, "classical.trajectory.L", "must be positive", issues);
                check(tc.samples >= 16, "classical.trajectory.samples", "need >= 16", issues);
                check(tc.horizon > 0.0, "classical.trajectory.horizon", "must be positive",
                      issues);
            }
        }
        read_field(j, "evolve_horizon", cfg.evolve_horizon);
        read_field(j, "evolve_samples", cfg.evolve_samples);
        check(cfg.evolve_horizon > 0.0, "evolve_horizon", "must be positive", issues);
        check(cfg.evolve_samples >= 8, "evolve_samples", "need >= 8 samples", issues);
        if (j.contains("outputs")) cfg.outputs = j.at("outputs").get<std::vector<std::string>>();
        check(!cfg.outputs.empty(), "outputs", "outputs must be non-empty", issues);
        for (const auto& o : cfg.outputs) {
            bool known = false;
            for (const auto& k : known_outputs()) known |= k == o;
            check(known, "outputs", "unknown output '" + o + "'", issues);
        }
        read_field(j, "seed", cfg.seed);
        if (j.contains("sweep")) {
            for (const auto& s : j.at("sweep")) {
                const std::string path = s.at("path").get<std::string>();
                const auto values = s.at("values").get<std::vector<double>>();
                bool known = false;
                for (const auto& k : sweepable_paths()) known |= k == path;
                check(known, "sweep", "unknown parameter path '" + path + "'", issues);
                check(!values.empty(), "sweep", "sweep values must be non-empty", issues);
                cfg.sweep.emplace_back(path, values);
            }
        }
        if (j.contains("tolerances")) {
            const json& t = j.at("tolerances");
            read_field(t, "equilibrium_rate_fraction", cfg.tol.equilibrium_rate_fraction);
            read_field(t, "equilibrium_window", cfg.tol.equilibrium_window);
            read_field(t, "fit_residual", cfg.tol.fit_residual);
            check(cfg.tol.equilibrium_rate_fraction > 0.0,
                  "tolerances.equilibrium_rate_fraction", "must be positive", issues);
        }
    } catch (const std::exception& e) {
        issues.push_back({"", std::string("malformed field: ") + e.what()});
    }
    if (!issues.empty()) return std::nullopt;
    return cfg;
}

std::string serialize_config(const ScenarioConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["name"] = cfg.name;
    j["model"] = {{"omega", cfg.model.omega},
                  {"hbar", cfg.model.hbar},
                  {"mass", cfg.model.mass},
                  {"fock_cutoff", cfg.model.fock_cutoff},
                  {"n_modes", cfg.model.n_modes},
                  {"band",
                   {{"type", cfg.model.band.type},
                    {"g", cfg.model.band.g},
                    {"center", cfg.model.band.center},
                    {"width", cfg.model.band.width}}}};
    j["pair"] = {{"L_values", cfg.pair.L_values},
                 {"weight_a", cfg.pair.weight_a},
                 {"scaling", cfg.pair.scaling},
                 {"envelope_ladder", cfg.pair.envelope_ladder}};
    j["qubit"] = {{"excited_weight", cfg.qubit.excited_weight},
                  {"mixed_population", cfg.qubit.mixed_population},
                  {"mixed_coherence", cfg.qubit.mixed_coherence}};
    j["wigner"] = {{"grid_n", cfg.wigner.grid_n},
                   {"x_half_width", cfg.wigner.x_half_width},
                   {"snapshot_times", cfg.wigner.snapshot_times}};
    json bands = json::array();
    for (const auto& [lo, hi] : cfg.classical.action_bands) bands.push_back({lo, hi});
    j["classical"] = {{"hbar_small", cfg.classical.hbar_small},
                      {"grid_n", cfg.classical.grid_n},
                      {"x_half_width", cfg.classical.x_half_width},
                      {"action_bands", bands},
                      {"trajectory",
                       {{"L", cfg.classical.trajectory.L},
                        {"horizon", cfg.classical.trajectory.horizon},
                        {"samples", cfg.classical.trajectory.samples},
                        {"box_center_x", cfg.classical.trajectory.box_center_x},
                        {"box_center_p", cfg.classical.trajectory.box_center_p},
                        {"box_width_x", cfg.classical.trajectory.box_width_x},
                        {"box_width_p", cfg.classical.trajectory.box_width_p},
                        {"grid_n", cfg.classical.trajectory.grid_n},
                        {"half_width", cfg.classical.trajectory.half_width}}}};
    j["evolve_horizon"] = cfg.evolve_horizon;
    j["evolve_samples"] = cfg.evolve_samples;
    j["outputs"] = cfg.outputs;
    j["seed"] = cfg.seed;
    json sweep = json::array();
    for (const auto& [path, values] : cfg.sweep)
        sweep.push_back({{"path", path}, {"values", values}});
    j["sweep"] = sweep;
    j["tolerances"] = {{"equilibrium_rate_fraction", cfg.tol.equilibrium_rate_fraction},
                       {"equilibrium_window", cfg.tol.equilibrium_window},
                       {"fit_residual", cfg.tol.fit_residual}};
    return j.dump(2) + "\n";
}

PoleStage pole_stage(const ScenarioConfig& cfg) {
    PoleStage ps;
    const auto& b = cfg.model.band;
    const double lo = b.center - 0.5 * b.width, hi = b.center + 0.5 * b.width;
    ps.band = b.type == "flat" ? SpectralDensity::flat_band(b.g, lo, hi)
                               : SpectralDensity::parabolic_band(b.g, lo, hi);
    ps.model = FriedrichsConfig::from_band(cfg.model.omega, ps.band, cfg.model.n_modes,
                                           cfg.model.hbar, cfg.model.mass,
                                           cfg.model.fock_cutoff);
    const cplx seed = perturbative_pole_seed(ps.band, cfg.model.omega);
    ps.z0 = find_pole(ps.band, cfg.model.omega, seed);
    ps.ladder = pole_ladder(ps.z0, 10);
    ps.t_relax = relaxation_time(ps.ladder, cfg.model.hbar);
    return ps;
}

GeneratorField damped_ladder_generator(const PhaseSpaceGrid& grid, double mass,
                                       double omega0p, double gamma_eff, double hbar,
                                       const std::vector<double>& times) {
    GeneratorField gen;
    gen.times = times;
    const PhaseSpaceFunction base = PhaseSpaceFunction::sample(grid, [&](double x, double p) {
        return cplx(omega0p * 0.5 * (mass * omega0p * x * x + p * p / (mass * omega0p)), 0.0);
    });
    for (double t : times) {
        PhaseSpaceFunction f = base;
        f.values *= std::exp(-gamma_eff * t / hbar);
        gen.fields.push_back(std::move(f));
    }
    return gen;
}

namespace {

struct Context {
    const ScenarioConfig& cfg;
    std::filesystem::path out;
    io::Format fmt;
    RunResult& result;

    std::optional<PoleStage> poles;
    std::optional<FriedrichsEvolver> evolver;

    void emit_table(const std::string& name, const io::Table& t) {
        const std::string body = fmt == io::Format::csv ? io::to_csv(t) : io::to_json(t);
        const std::string file = name + (fmt == io::Format::csv ? ".csv" : ".json");
        const size_t bytes = io::write_file(out / file, body);
        result.artifacts.push_back({file, bytes, io::crc32(body)});
    }

    void emit_text(const std::string& file, const std::string& body) {
        const size_t bytes = io::write_file(out / file, body);
        result.artifacts.push_back({file, bytes, io::crc32(body)});
    }

    const PoleStage& need_poles() {
        if (!poles) poles = pole_stage(cfg);
        return *poles;
    }

    const FriedrichsEvolver& need_evolver() {
        if (!evolver) evolver = FriedrichsEvolver(need_poles().model);
        return *evolver;
    }
};

struct EnvelopeFit {
    std::vector<double> times;
    std::vector<double> envelope;
    ModeDecomposition decomp;
    EffectiveMode eff;
    double t_D = 0.0;
};

EnvelopeFit fit_envelope(Context& ctx, double L) {
    const auto& ps = ctx.need_poles();
    const auto& cfg = ctx.cfg;
    CoherentPairInit init;
    init.x1 = -0.5 * L;
    init.x2 = 0.5 * L;
    init.a = cfg.pair.weight_a;
    init.b = std::sqrt(1.0 - cfg.pair.weight_a * cfg.pair.weight_a);
    init.scaling = parse_scaling(cfg.pair.scaling);
    CoherentPairDynamics dyn(ctx.need_evolver(), init, ps.z0.omega);

    EnvelopeFit ef;
    ef.times = linspace(0.0, cfg.evolve_horizon * ps.t_relax, cfg.evolve_samples);
    for (double t : ef.times) ef.envelope.push_back(dyn.coherence_envelope(t));
    const PoleCatalogue ladder = envelope_mode_catalogue(ps.z0, cfg.pair.envelope_ladder);
    FitModesOptions opt;
    opt.fit_equilibrium = false; // the ladder's gamma = 0 entry holds the plateau
    opt.residual_tol = cfg.tol.fit_residual;
    ef.decomp = fit_modes(ef.times, ef.envelope, ladder, cfg.model.hbar, opt);
    ef.eff = effective_gamma(ef.decomp);
    ef.t_D = decoherence_time(ef.eff, cfg.model.hbar);
    return ef;
}

// One-excitation reduced series for a (possibly mixed) initial qubit state
// given as convex pure branches {(q_k, c0_k, c1_k)}.
struct QubitBranch {
    double q;
    cplx c0, c1;
};

std::vector<DensityMatrix> qubit_series(const FriedrichsEvolver& ev,
                                        const std::vector<QubitBranch>& branches,
                                        const std::vector<double>& times) {
    std::vector<DensityMatrix> out;
    out.reserve(times.size());
    for (double t : times) {
        Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
        for (const auto& b : branches) rho += b.q * one_excitation_reduced(ev, b.c0, b.c1, t);
        out.push_back(DensityMatrix::unchecked(rho));
    }
    return out;
}

std::vector<QubitBranch> mixed_qubit_branches(double population, double coherence) {
    Eigen::Matrix2cd rho;
    rho << 1.0 - population, coherence,
           coherence,        population;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho);
    std::vector<QubitBranch> branches;
    for (int k = 0; k < 2; ++k) {
        const double q = es.eigenvalues()(k);
        if (q < 1e-14) continue;
        branches.push_back({q, es.eigenvectors()(0, k), es.eigenvectors()(1, k)});
    }
    return branches;
}

struct QubitPipeline {
    std::vector<double> times;
    std::vector<DensityMatrix> rho_s;
    std::vector<ModeDecomposition> decomps;     // per hermitian_basis observable
    std::vector<Eigen::MatrixXcd> observables;
    EffectiveMode eff;
    double t_D = 0.0;
    int slow_count = 0;
    std::vector<DensityMatrix> rho_ps;
    std::vector<double> repair;
};

QubitPipeline qubit_pipeline(Context& ctx, const std::vector<QubitBranch>& branches) {
    const auto& ps = ctx.need_poles();
    const auto& cfg = ctx.cfg;
    QubitPipeline qp;
    qp.times = linspace(0.0, cfg.evolve_horizon * ps.t_relax, cfg.evolve_samples);
    qp.rho_s = qubit_series(ctx.need_evolver(), branches, qp.times);
    qp.observables = hermitian_basis(2);
    const PoleCatalogue cat = expectation_mode_catalogue(ps.z0, 1);

    FitModesOptions opt;
    opt.residual_tol = cfg.tol.fit_residual;
    std::vector<double> values(qp.times.size());
    for (const auto& obs : qp.observables) {
        for (size_t k = 0; k < qp.times.size(); ++k)
            values[k] = std::real((qp.rho_s[k].mat * obs).trace());
        qp.decomps.push_back(fit_modes(qp.times, values, cat, cfg.model.hbar, opt));
    }

    // scenario-level effective mode: per-channel weights aggregated as
    // sum_obs |a_i(0)| so opposite-sign amplitudes cannot cancel
    ModeDecomposition agg = qp.decomps.front();
    for (auto& m : agg.modes) m.amplitude = 0.0;
    for (const auto& d : qp.decomps)
        for (size_t i = 0; i < d.modes.size(); ++i)
            agg.modes[i].amplitude += std::abs(d.modes[i].initial_value());
    for (auto& m : agg.modes) m.phase = 0.0;
    qp.eff = effective_gamma(agg);
    qp.t_D = decoherence_time(qp.eff, cfg.model.hbar);
    qp.slow_count = qp.eff.slow_count;

    qp.repair.resize(qp.times.size());
    for (size_t k = 0; k < qp.times.size(); ++k) {
        double rd = 0.0;
        qp.rho_ps.push_back(
            privileged_state(qp.decomps, qp.observables, qp.slow_count, qp.times[k], &rd));
        qp.repair[k] = rd;
    }
    return qp;
}

void stage_poles(Context& ctx) {
    const auto& ps = ctx.need_poles();
    io::Table t;
    t.columns = {"n", "omega", "gamma", "t_R"};
    for (size_t n = 0; n < ps.ladder.poles.size(); ++n)
        t.rows.push_back({static_cast<double>(n + 1), ps.ladder.poles[n].omega,
                          ps.ladder.poles[n].gamma, ps.t_relax});
    ctx.emit_table("poles", t);
}

void stage_survival(Context& ctx) {
    const auto& ps = ctx.need_poles();
    const auto& ev = ctx.need_evolver();
    const auto times =
        linspace(0.0, ctx.cfg.evolve_horizon * ps.t_relax, ctx.cfg.evolve_samples);
    io::Table t;
    t.columns = {"t", "value_re", "value_im", "survival_prob"};
    std::vector<double> probs;
    for (double tt : times) {
        const cplx a = ev.survival_amplitude(tt);
        probs.push_back(std::norm(a));
        t.rows.push_back({tt, std::real(a), std::imag(a), std::norm(a)});
    }
    ctx.emit_table("survival", t);
    const KhalfinReport kr = khalfin_scan(times, probs, ps.z0.gamma, ctx.cfg.model.hbar);
    nlohmann::json j = {{"khalfin_detected", kr.detected},
                        {"onset_time", kr.onset_time},
                        {"recurrence_time", ps.model.recurrence_time()}};
    ctx.emit_text("khalfin.json", j.dump(2) + "\n");
}

void stage_envelope(Context& ctx) {
    const auto& ps = ctx.need_poles();
    io::Table ts;
    ts.columns = {"L", "gamma_eff", "t_D", "t_R", "t_D_over_t_R"};
    for (size_t li = 0; li < ctx.cfg.pair.L_values.size(); ++li) {
        const double L = ctx.cfg.pair.L_values[li];
        EnvelopeFit ef = fit_envelope(ctx, L);
        io::Table t;
        t.columns = {"t", "envelope"};
        for (size_t k = 0; k < ef.times.size(); ++k)
            t.rows.push_back({ef.times[k], ef.envelope[k]});
        ctx.emit_table("envelope_L" + std::to_string(li), t);
        ts.rows.push_back({L, ef.eff.gamma_eff, ef.t_D, ps.t_relax, ef.t_D / ps.t_relax});
    }
    ctx.emit_table("timescales", ts);
}

void stage_modes(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const double c1 = std::sqrt(cfg.qubit.excited_weight);
    const double c0 = std::sqrt(1.0 - cfg.qubit.excited_weight);
    QubitPipeline qp = qubit_pipeline(ctx, {{1.0, c0, c1}});

    io::Table t;
    t.columns = {"observable", "gamma", "amplitude", "freq", "phase"};
    for (size_t o = 0; o < qp.decomps.size(); ++o)
        for (const auto& m : qp.decomps[o].modes)
            t.rows.push_back({static_cast<double>(o), m.gamma, m.amplitude, m.freq, m.phase});
    ctx.emit_table("modes", t);

    io::Table s;
    s.columns = {"gamma_eff", "t_D", "t_R", "slow_count"};
    s.rows.push_back({qp.eff.gamma_eff, qp.t_D, ctx.need_poles().t_relax,
                      static_cast<double>(qp.slow_count)});
    ctx.emit_table("modes_summary", s);

    // MPB bookkeeping on the privileged-state series
    const MovingPreferredBasis mpb = moving_preferred_basis(qp.times, qp.rho_ps);
    io::Table w;
    w.columns = {"t", "p0", "p1", "degenerate", "trace_distance", "repair"};
    for (size_t k = 0; k < qp.times.size(); ++k)
        w.rows.push_back({qp.times[k], mpb.weights[k](0), mpb.weights[k](1),
                          static_cast<double>(mpb.degenerate[k]),
                          trace_distance(qp.rho_s[k].mat, qp.rho_ps[k].mat), qp.repair[k]});
    ctx.emit_table("mpb_weights", w);
}

void stage_entropy(Context& ctx) {
    const auto& cfg = ctx.cfg;
    QubitPipeline qp = qubit_pipeline(
        ctx, mixed_qubit_branches(cfg.qubit.mixed_population, cfg.qubit.mixed_coherence));
    const std::vector<double> dss = entropy_production(qp.times, qp.rho_s);
    const std::vector<double> dsp = entropy_production(qp.times, qp.rho_ps);
    io::Table t;
    t.columns = {"t", "S_lin", "dS_lin_dt", "S_lin_ps", "dS_lin_ps_dt"};
    for (size_t k = 0; k < qp.times.size(); ++k)
        t.rows.push_back({qp.times[k], linear_entropy(qp.rho_s[k]), dss[k],
                          linear_entropy(qp.rho_ps[k]), dsp[k]});
    ctx.emit_table("entropy", t);
}

void emit_phase_space(Context& ctx, const std::string& name, const PhaseSpaceFunction& f) {
    const auto& g = f.grid;
    std::string body = "# grid x_min=" + io::format_real(g.x_min) +
                       " x_max=" + io::format_real(g.x_max) +
                       " p_min=" + io::format_real(g.p_min) +
                       " p_max=" + io::format_real(g.p_max) + " n_x=" + std::to_string(g.n_x) +
                       " n_p=" + std::to_string(g.n_p) + " hbar=" + io::format_real(g.hbar) +
                       " order=row-major\nvalue\n";
    body.reserve(body.size() + static_cast<size_t>(g.n_x) * g.n_p * 20);
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_p; ++j) {
            body += io::format_real(std::real(f.values(i, j)));
            body += '\n';
        }
    ctx.emit_text(name + ".csv", body);
}

void stage_wigner(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& ps = ctx.need_poles();
    CoherentPairInit init;
    const double L = cfg.pair.L_values.front();
    init.x1 = -0.5 * L;
    init.x2 = 0.5 * L;
    init.a = cfg.pair.weight_a;
    init.b = std::sqrt(1.0 - cfg.pair.weight_a * cfg.pair.weight_a);
    init.scaling = parse_scaling(cfg.pair.scaling);
    CoherentPairDynamics dyn(ctx.need_evolver(), init, ps.z0.omega);

    const PhaseSpaceGrid grid = PhaseSpaceGrid::conjugate(
        -cfg.wigner.x_half_width, cfg.wigner.x_half_width, cfg.wigner.grid_n, cfg.model.hbar);
    for (size_t k = 0; k < cfg.wigner.snapshot_times.size(); ++k) {
        const double t = cfg.wigner.snapshot_times[k] * ps.t_relax;
        const Eigen::MatrixXcd rho_fock = dyn.reduced_state(t);
        const Eigen::MatrixXcd rho_pos =
            fock_to_position(rho_fock, grid, cfg.model.mass, ps.z0.omega);
        const PhaseSpaceFunction w = wigner_state(rho_pos, grid);
        emit_phase_space(ctx, "wigner_t" + std::to_string(k), w);
    }
}

void stage_domains(Context& ctx) {
    const auto& cc = ctx.cfg.classical;
    const double hb = cc.hbar_small;
    const PhaseSpaceGrid grid =
        PhaseSpaceGrid::conjugate(-cc.x_half_width, cc.x_half_width, cc.grid_n, hb);
    const double mass = ctx.cfg.model.mass;
    const double omega = ctx.need_poles().z0.omega;
    std::vector<Domain> domains;
    std::string rle = "domain,row,start,length\n";
    for (size_t b = 0; b < cc.action_bands.size(); ++b) {
        const auto& [lo, hi] = cc.action_bands[b];
        const int n_lo = std::max(0, static_cast<int>(std::ceil(lo / hb - 0.5)));
        const int n_hi = static_cast<int>(std::floor(hi / hb - 0.5));
        if (n_hi < n_lo)
            throw ContractError("stage_domains: action band contains no levels at this hbar");
        const Eigen::MatrixXcd proj = fock_band_projector(grid, n_lo, n_hi, mass, omega);
        const PhaseSpaceFunction sym = projector_symbol(proj, grid);
        domains.push_back(characteristic_domain(sym));
        // run-length encode the mask rows
        const Domain& d = domains.back();
        for (int i = 0; i < grid.n_x; ++i) {
            int j = 0;
            while (j < grid.n_p) {
                if (!d.at(i, j)) { ++j; continue; }
                int start = j;
                while (j < grid.n_p && d.at(i, j)) ++j;
                rle += std::to_string(b) + "," + std::to_string(i) + "," +
                       std::to_string(start) + "," + std::to_string(j - start) + "\n";
            }
        }
    }
    ctx.emit_text("domains_rle.csv", rle);
    const PartitionReport rep = check_partition(domains);
    nlohmann::json j;
    j["volumes"] = rep.volumes;
    j["total_volume"] = rep.total_volume;
    j["disjoint"] = rep.disjoint;
    j["volume_bounded"] = rep.volume_bounded;
    j["violations"] = rep.violations;
    std::vector<bool> conn;
    for (const auto& d : domains) conn.push_back(d.connected);
    j["connected"] = conn;
    ctx.emit_text("partition.json", j.dump(2) + "\n");
}

void stage_trajectory(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& ps = ctx.need_poles();
    const auto& tc = cfg.classical.trajectory;

    // damping rate from the coherence-envelope fit at the trajectory separation
    EnvelopeFit ef = fit_envelope(ctx, tc.L);

    const PhaseSpaceGrid grid = PhaseSpaceGrid::conjugate(-tc.half_width, tc.half_width,
                                                          tc.grid_n, cfg.model.hbar);
    // nested Fock-band domains validate the annular geometry and provide the
    // action-angle chart
    std::vector<Domain> family;
    const int band_pairs[3][2] = {{0, 1}, {2, 3}, {4, 5}};
    for (const auto& b : band_pairs) {
        const Eigen::MatrixXcd proj =
            fock_band_projector(grid, b[0], b[1], cfg.model.mass, ps.z0.omega);
        family.push_back(characteristic_domain(projector_symbol(proj, grid)));
    }
    const ActionAnglePair pair =
        action_angle_from_domains(family, cfg.model.mass, ps.z0.omega);

    const auto times = linspace(0.0, tc.horizon * ps.t_relax, tc.samples);
    const GeneratorField gen = damped_ladder_generator(
        grid, cfg.model.mass, ps.z0.omega, ef.eff.gamma_eff, cfg.model.hbar, times);

    // weight: the coherent-pair state symbol at t = 0
    CoherentPairInit init;
    init.x1 = -0.5 * tc.L;
    init.x2 = 0.5 * tc.L;
    init.a = cfg.pair.weight_a;
    init.b = std::sqrt(1.0 - cfg.pair.weight_a * cfg.pair.weight_a);
    init.scaling = parse_scaling(cfg.pair.scaling);
    CoherentPairDynamics dyn(ctx.need_evolver(), init, ps.z0.omega);
    const Eigen::MatrixXcd rho_pos =
        fock_to_position(dyn.reduced_state(0.0), grid, cfg.model.mass, ps.z0.omega);
    const PhaseSpaceFunction weight = wigner_state(rho_pos, grid);

    Box box{tc.box_center_x, tc.box_center_p, tc.box_width_x, tc.box_width_p};
    const Trajectory traj = evolve_phase_space(gen, pair, box, &weight);

    EquilibriumCriteria crit;
    crit.rate_fraction = cfg.tol.equilibrium_rate_fraction;
    crit.window = cfg.tol.equilibrium_window * ps.t_relax;
    const EquilibriumReport rep = trajectory_surfaces(traj, crit);

    io::Table t;
    t.columns = {"t", "Pi_bar", "Phi_bar", "equilibrium_flag"};
    for (size_t k = 0; k < traj.times.size(); ++k)
        t.rows.push_back({traj.times[k], traj.pi_bar[k], traj.phi_bar[k],
                          rep.reached && traj.times[k] >= rep.time ? 1.0 : 0.0});
    ctx.emit_table("trajectory", t);

    nlohmann::json j = {{"equilibrium_reached", rep.reached},
                        {"equilibrium_time", rep.time},
                        {"equilibrium_time_relax_units", rep.time / ps.t_relax},
                        {"pi_rate_scale", rep.pi_rate_scale},
                        {"phi_rate_scale", rep.phi_rate_scale},
                        {"gamma_eff", ef.eff.gamma_eff},
                        {"bracket_residual", pair.bracket_residual}};
    ctx.emit_text("equilibrium.json", j.dump(2) + "\n");
}

void run_stages(Context& ctx) {
    struct StageDef {
        const char* name;
        void (*fn)(Context&);
    };
    const StageDef defs[] = {
        {"poles", stage_poles},       {"survival", stage_survival},
        {"envelope", stage_envelope}, {"modes", stage_modes},
        {"entropy", stage_entropy},   {"wigner", stage_wigner},
        {"domains", stage_domains},   {"trajectory", stage_trajectory},
    };
    for (const auto& def : defs) {
        bool wanted = false;
        for (const auto& o : ctx.cfg.outputs) wanted |= o == def.name;
        if (!wanted) continue;
        StageResult sr;
        sr.stage = def.name;
        try {
            def.fn(ctx);
            sr.ok = true;
        } catch (const std::exception& e) {
            sr.ok = false;
            sr.error = e.what();
            ctx.result.stages.push_back(sr);
            ctx.result.ok = false;
            ctx.result.failed_stage = def.name;
            return;
        }
        ctx.result.stages.push_back(sr);
    }
}

} // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                       io::Format format) {
    RunResult result;
    Context ctx{cfg, out_dir, format, result};
    run_stages(ctx);

    // parameter sweeps re-run the scenario with one path overridden
    if (result.ok) {
        for (const auto& [path, values] : cfg.sweep) {
            for (size_t vi = 0; vi < values.size(); ++vi) {
                ScenarioConfig sub = cfg;
                sub.sweep.clear();
                if (path == "pair.L")
                    sub.pair.L_values = {values[vi]};
                else if (path == "model.band.g")
                    sub.model.band.g = values[vi];
                else if (path == "classical.hbar_small")
                    sub.classical.hbar_small = values[vi];
                else
                    throw ConfigError("run_scenario: unsupported sweep path " + path);
                const auto subdir =
                    out_dir / ("sweep_" + std::to_string(vi));
                RunResult sr = run_scenario(sub, subdir, format);
                for (const auto& a : sr.artifacts)
                    result.artifacts.push_back(
                        {"sweep_" + std::to_string(vi) + "/" + a.name, a.bytes, a.crc});
                if (!sr.ok) {
                    result.ok = false;
                    result.failed_stage = sr.failed_stage;
                    break;
                }
            }
            if (!result.ok) break;
        }
    }

    nlohmann::json manifest;
    manifest["schema_version"] = cfg.schema_version;
    manifest["name"] = cfg.name;
    manifest["seed"] = cfg.seed;
    manifest["config"] = nlohmann::json::parse(serialize_config(cfg));
    manifest["ok"] = result.ok;
    if (!result.ok) manifest["failed_stage"] = result.failed_stage;
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : result.stages)
        stages.push_back({{"stage", s.stage}, {"ok", s.ok}, {"error", s.error}});
    manifest["stages"] = stages;
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& a : result.artifacts)
        arts.push_back({{"name", a.name}, {"bytes", a.bytes}, {"crc32", a.crc}});
    manifest["artifacts"] = arts;
    io::write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return result;
}

} // namespace qcl::scenario
