#include "qcl/classical_limit.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "qcl/errors.hpp"

namespace qcl {

PhaseSpaceFunction projector_symbol(const Eigen::MatrixXcd& proj, const PhaseSpaceGrid& grid,
                                    double idem_tol) {
    const double herm = (proj - proj.adjoint()).cwiseAbs().maxCoeff();
    if (herm > idem_tol)
        throw ContractError("projector_symbol: input not Hermitian, residual " +
                            std::to_string(herm));
    const double idem = (proj * proj - proj).cwiseAbs().maxCoeff();
    if (idem > idem_tol)
        throw ContractError("projector_symbol: input not idempotent, residual " +
                            std::to_string(idem));
    return wigner_transform(proj, grid);
}

Domain characteristic_domain(const PhaseSpaceFunction& sym, double threshold) {
    if (sym.max_imag() > 1e-8)
        throw ContractError("characteristic_domain: symbol is not real");
    Domain d;
    d.grid = sym.grid;
    const int nx = sym.grid.n_x, np = sym.grid.n_p;
    d.mask.assign(static_cast<size_t>(nx) * np, 0);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < np; ++j)
            if (std::real(sym.values(i, j)) >= threshold) {
                d.mask[static_cast<size_t>(i) * np + j] = 1;
                ++d.cell_count;
            }
    if (d.cell_count == 0) throw ContractError("characteristic_domain: empty domain");
    d.volume = static_cast<double>(d.cell_count) / (static_cast<double>(nx) * np);

    // 4-neighbor flood fill from the first set cell
    std::vector<uint8_t> seen(d.mask.size(), 0);
    std::deque<std::pair<int, int>> queue;
    for (int i = 0; i < nx && queue.empty(); ++i)
        for (int j = 0; j < np && queue.empty(); ++j)
            if (d.at(i, j)) queue.emplace_back(i, j);
    long reached = 0;
    seen[static_cast<size_t>(queue.front().first) * np + queue.front().second] = 1;
    while (!queue.empty()) {
        auto [i, j] = queue.front();
        queue.pop_front();
        ++reached;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int a = i + di[k], b = j + dj[k];
            if (a < 0 || a >= nx || b < 0 || b >= np) continue;
            const size_t idx = static_cast<size_t>(a) * np + b;
            if (d.mask[idx] && !seen[idx]) {
                seen[idx] = 1;
                queue.emplace_back(a, b);
            }
        }
    }
    d.connected = reached == d.cell_count;
    return d;
}

PartitionReport check_partition(const std::vector<Domain>& domains, double overlap_tol,
                                double volume_tol) {
    PartitionReport rep;
    const size_t n = domains.size();
    rep.overlap_fraction = Eigen::MatrixXd::Zero(n, n);
    rep.disjoint = true;
    for (size_t a = 0; a < n; ++a) {
        rep.volumes.push_back(domains[a].volume);
        rep.total_volume += domains[a].volume;
        for (size_t b = a + 1; b < n; ++b) {
            if (domains[a].mask.size() != domains[b].mask.size())
                throw ContractError("check_partition: domains on different grids");
            long common = 0;
            for (size_t c = 0; c < domains[a].mask.size(); ++c)
                if (domains[a].mask[c] && domains[b].mask[c]) ++common;
            const double smaller =
                std::min(domains[a].cell_count, domains[b].cell_count);
            const double frac = smaller > 0 ? common / smaller : 0.0;
            rep.overlap_fraction(a, b) = rep.overlap_fraction(b, a) = frac;
            if (frac > overlap_tol) {
                rep.disjoint = false;
                rep.violations.push_back("domains " + std::to_string(a) + "," +
                                         std::to_string(b) + " overlap fraction " +
                                         std::to_string(frac));
            }
        }
    }
    rep.volume_bounded = rep.total_volume <= 1.0 + volume_tol;
    if (!rep.volume_bounded)
        rep.violations.push_back("total volume " + std::to_string(rep.total_volume) +
                                 " exceeds 1");
    return rep;
}

double box_average(const PhaseSpaceFunction& f, const PhaseSpaceFunction& rho, const Box& box) {
    const auto& g = f.grid;
    if (rho.grid.n_x != g.n_x || rho.grid.n_p != g.n_p)
        throw GridError("box_average: grids differ");
    if (box.center_x - 0.5 * box.width_x < g.x_min ||
        box.center_x + 0.5 * box.width_x > g.x_max ||
        box.center_p - 0.5 * box.width_p < g.p_min ||
        box.center_p + 0.5 * box.width_p > g.p_max)
        throw ContractError("box_average: box extends outside the grid");
    double acc = 0.0;
    for (int i = 0; i < g.n_x; ++i) {
        const double x = g.x(i);
        if (std::abs(x - box.center_x) > 0.5 * box.width_x) continue;
        for (int j = 0; j < g.n_p; ++j) {
            const double p = g.p(j);
            if (std::abs(p - box.center_p) > 0.5 * box.width_p) continue;
            acc += std::real(f.values(i, j)) * std::real(rho.values(i, j));
        }
    }
    return acc * g.cell_area() / (box.width_x * box.width_p);
}

namespace {

double scaled_radius(double x, double p, double mass, double omega) {
    const double X = x * std::sqrt(mass * omega);
    const double Y = p / std::sqrt(mass * omega);
    return std::hypot(X, Y);
}

} // namespace

ActionAnglePair action_angle_from_domains(const std::vector<Domain>& family, double mass,
                                          double omega, int center_exclusion_cells) {
    if (family.empty())
        throw ContractError("action_angle_from_domains: empty family");
    const PhaseSpaceGrid& g = family.front().grid;

    // geometry validation: connected, radially ordered level sets around 0
    struct Radial { double r_min, r_max, mean_action; };
    std::vector<Radial> radial;
    for (const auto& d : family) {
        if (!d.connected)
            throw GeometryError("action_angle_from_domains: disconnected domain");
        double r_lo = 1e300, r_hi = 0.0, act = 0.0;
        for (int i = 0; i < g.n_x; ++i)
            for (int j = 0; j < g.n_p; ++j) {
                if (!d.at(i, j)) continue;
                const double r = scaled_radius(g.x(i), g.p(j), mass, omega);
                r_lo = std::min(r_lo, r);
                r_hi = std::max(r_hi, r);
                act += 0.5 * r * r;
            }
        radial.push_back({r_lo, r_hi, act / d.cell_count});
    }
    for (size_t k = 0; k + 1 < radial.size(); ++k) {
        if (!(radial[k].mean_action < radial[k + 1].mean_action))
            throw GeometryError("action_angle_from_domains: family not radially ordered");
        if (radial[k].r_max > radial[k + 1].r_max)
            throw GeometryError("action_angle_from_domains: outer radii not nested");
    }

    ActionAnglePair pair;
    pair.mass = mass;
    pair.omega = omega;
    for (const auto& r : radial) pair.levels.push_back(r.mean_action);
    pair.action = PhaseSpaceFunction::sample(g, [&](double x, double p) {
        return cplx(0.5 * (mass * omega * x * x + p * p / (mass * omega)), 0.0);
    });
    pair.angle = PhaseSpaceFunction::sample(g, [&](double x, double p) {
        const double X = x * std::sqrt(mass * omega);
        const double Y = p / std::sqrt(mass * omega);
        return cplx(-std::atan2(Y, X), 0.0);
    });

    // wrapped finite-difference check of {Phi, Pi} = 1 away from the center
    const double rx = center_exclusion_cells * g.dx() * std::sqrt(mass * omega);
    const double rp = center_exclusion_cells * g.dp() / std::sqrt(mass * omega);
    const double r_excl = std::max(rx, rp);
    double worst = 0.0;
    auto wrap_diff = [](double a, double b) {
        double d = a - b;
        while (d > M_PI) d -= 2.0 * M_PI;
        while (d <= -M_PI) d += 2.0 * M_PI;
        return d;
    };
    for (int i = 1; i + 1 < g.n_x; ++i)
        for (int j = 1; j + 1 < g.n_p; ++j) {
            const double r = scaled_radius(g.x(i), g.p(j), mass, omega);
            if (r < r_excl) continue;
            const double phix = wrap_diff(std::real(pair.angle.values(i + 1, j)),
                                          std::real(pair.angle.values(i - 1, j))) /
                                (2.0 * g.dx());
            const double phip = wrap_diff(std::real(pair.angle.values(i, j + 1)),
                                          std::real(pair.angle.values(i, j - 1))) /
                                (2.0 * g.dp());
            const double pix = (std::real(pair.action.values(i + 1, j)) -
                                std::real(pair.action.values(i - 1, j))) /
                               (2.0 * g.dx());
            const double pip = (std::real(pair.action.values(i, j + 1)) -
                                std::real(pair.action.values(i, j - 1))) /
                               (2.0 * g.dp());
            worst = std::max(worst, std::abs(phix * pip - phip * pix - 1.0));
        }
    pair.bracket_residual = worst;
    return pair;
}

namespace {

struct VectorField {
    Eigen::MatrixXd vx, vp;   // dx/dt = d(aleph)/dp, dp/dt = -d(aleph)/dx
};

VectorField field_from(const PhaseSpaceFunction& aleph) {
    VectorField v;
    v.vx = fd_derivative(aleph.values, 1, aleph.grid.dp()).real();
    v.vp = (-fd_derivative(aleph.values, 0, aleph.grid.dx())).real();
    return v;
}

// bilinear lookup; throws past the grid edge
struct Interp {
    const PhaseSpaceGrid* g;
    const Eigen::MatrixXd* vx;
    const Eigen::MatrixXd* vp;

    std::pair<double, double> operator()(double x, double p) const {
        const double fi = (x - g->x_min) / g->dx();
        const double fj = (p - g->p_min) / g->dp();
        const int i = static_cast<int>(std::floor(fi));
        const int j = static_cast<int>(std::floor(fj));
        if (i < 0 || i + 1 >= g->n_x || j < 0 || j + 1 >= g->n_p)
            throw TrajectoryError("characteristic left the grid", 0.0);
        const double a = fi - i, b = fj - j;
        auto mix = [&](const Eigen::MatrixXd& m) {
            return (1 - a) * ((1 - b) * m(i, j) + b * m(i, j + 1)) +
                   a * ((1 - b) * m(i + 1, j) + b * m(i + 1, j + 1));
        };
        return {mix(*vx), mix(*vp)};
    }
};

} // namespace

Trajectory evolve_phase_space(const GeneratorField& gen, const ActionAnglePair& pair,
                              const Box& init, const PhaseSpaceFunction* weight,
                              const EvolveOptions& opt) {
    if (gen.times.size() != gen.fields.size() || gen.times.size() < 2)
        throw ContractError("evolve_phase_space: need >= 2 generator samples");
    const PhaseSpaceGrid& g = gen.fields.front().grid;

    // seed points: grid cells with centers inside the box
    std::vector<double> xs, ps, ws;
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_p; ++j) {
            if (!init.contains(g.x(i), g.p(j))) continue;
            xs.push_back(g.x(i));
            ps.push_back(g.p(j));
            ws.push_back(weight ? std::real(weight->values(i, j)) : 1.0);
        }
    if (xs.empty()) throw ContractError("evolve_phase_space: box contains no grid cells");
    const size_t npts = xs.size();

    std::vector<VectorField> fields;
    fields.reserve(gen.fields.size());
    for (const auto& f : gen.fields) fields.push_back(field_from(f));

    auto velocity = [&](double x, double p, double t) {
        // linear interpolation between field samples, clamped at the ends
        size_t k = 0;
        while (k + 2 < gen.times.size() && gen.times[k + 1] <= t) ++k;
        const double t0 = gen.times[k], t1 = gen.times[k + 1];
        const double lam = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
        const Interp i0{&g, &fields[k].vx, &fields[k].vp};
        const Interp i1{&g, &fields[k + 1].vx, &fields[k + 1].vp};
        auto [ax, ap] = i0(x, p);
        auto [bx, bp] = i1(x, p);
        return std::pair<double, double>{(1 - lam) * ax + lam * bx,
                                         (1 - lam) * ap + lam * bp};
    };

    Trajectory traj;
    traj.times = gen.times;
    traj.pi_bar.resize(gen.times.size());
    traj.phi_bar.resize(gen.times.size());

    auto angle_at = [&](double x, double p) {
        const double X = x * std::sqrt(pair.mass * pair.omega);
        const double Y = p / std::sqrt(pair.mass * pair.omega);
        return -std::atan2(Y, X);
    };
    auto action_at = [&](double x, double p) {
        return 0.5 * (pair.mass * pair.omega * x * x + p * p / (pair.mass * pair.omega));
    };

    std::vector<double> phi_prev(npts), phi_acc(npts);
    const double cell_over_box = g.cell_area() / (init.width_x * init.width_p);

    auto record = [&](size_t step) {
        double pi_sum = 0.0, phi_sum = 0.0;
        for (size_t q = 0; q < npts; ++q) {
            pi_sum += ws[q] * action_at(xs[q], ps[q]);
            phi_sum += ws[q] * phi_acc[q];
        }
        traj.pi_bar[step] = pi_sum * cell_over_box;
        traj.phi_bar[step] = phi_sum * cell_over_box;
    };

    for (size_t q = 0; q < npts; ++q) {
        phi_prev[q] = angle_at(xs[q], ps[q]);
        phi_acc[q] = phi_prev[q];
    }
    record(0);

    for (size_t step = 0; step + 1 < gen.times.size(); ++step) {
        const double t0 = gen.times[step], t1 = gen.times[step + 1];
        const double h = (t1 - t0) / opt.substeps;
        for (int sub = 0; sub < opt.substeps; ++sub) {
            const double t = t0 + sub * h;
            for (size_t q = 0; q < npts; ++q) {
                double& x = xs[q];
                double& p = ps[q];
                try {
                    auto [k1x, k1p] = velocity(x, p, t);
                    auto [k2x, k2p] = velocity(x + 0.5 * h * k1x, p + 0.5 * h * k1p, t + 0.5 * h);
                    auto [k3x, k3p] = velocity(x + 0.5 * h * k2x, p + 0.5 * h * k2p, t + 0.5 * h);
                    auto [k4x, k4p] = velocity(x + h * k3x, p + h * k3p, t + h);
                    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
                    p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
                } catch (const TrajectoryError&) {
                    throw TrajectoryError("evolve_phase_space: characteristic exited the grid",
                                          t);
                }
            }
        }
        for (size_t q = 0; q < npts; ++q) {
            const double raw = angle_at(xs[q], ps[q]);
            double d = raw - phi_prev[q];
            while (d > M_PI) d -= 2.0 * M_PI;
            while (d <= -M_PI) d += 2.0 * M_PI;
            phi_acc[q] += d;
            phi_prev[q] = raw;
        }
        record(step + 1);
    }
    return traj;
}

EquilibriumReport trajectory_surfaces(const Trajectory& traj, const EquilibriumCriteria& crit) {
    EquilibriumReport rep;
    const size_t n = traj.times.size();
    if (n < 3) throw ContractError("trajectory_surfaces: need >= 3 samples");
    const double horizon = traj.times.back() - traj.times.front();
    const double window = crit.window > 0.0 ? crit.window : 0.1 * horizon;

    auto rates = [&](const std::vector<double>& y) {
        std::vector<double> r(n);
        for (size_t k = 1; k + 1 < n; ++k)
            r[k] = (y[k + 1] - y[k - 1]) / (traj.times[k + 1] - traj.times[k - 1]);
        r[0] = r[1];
        r[n - 1] = r[n - 2];
        return r;
    };
    const std::vector<double> rp = rates(traj.pi_bar);
    const std::vector<double> rf = rates(traj.phi_bar);

    auto scale_of = [&](const std::vector<double>& r, const std::vector<double>& y) {
        double acc = 0.0;
        int cnt = 0;
        for (size_t k = 0; k < n && traj.times[k] <= traj.times.front() + window; ++k) {
            acc += std::abs(r[k]);
            ++cnt;
        }
        const double mean_rate = cnt ? acc / cnt : 0.0;
        const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
        return std::max(mean_rate, (*hi - *lo) / std::max(horizon, 1e-300));
    };
    rep.pi_rate_scale = scale_of(rp, traj.pi_bar);
    rep.phi_rate_scale = scale_of(rf, traj.phi_bar);

    const double tol_p = crit.rate_fraction * std::max(rep.pi_rate_scale, 1e-300);
    const double tol_f = crit.rate_fraction * std::max(rep.phi_rate_scale, 1e-300);
    size_t quiet_start = 0;
    bool in_quiet = false;
    for (size_t k = 0; k < n; ++k) {
        const bool quiet = std::abs(rp[k]) <= tol_p && std::abs(rf[k]) <= tol_f;
        if (quiet && !in_quiet) {
            in_quiet = true;
            quiet_start = k;
        }
        if (!quiet) in_quiet = false;
        if (in_quiet && traj.times[k] - traj.times[quiet_start] >= window) {
            rep.reached = true;
            rep.time = traj.times[k];
            break;
        }
    }
    return rep;
}

} // namespace qcl
