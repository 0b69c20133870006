#include "qcl/mode_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qcl/errors.hpp"

namespace qcl {

double ModeDecomposition::value(double t) const {
    double acc = equilibrium;
    for (const auto& m : modes) acc += m.value(t, hbar);
    return acc;
}

namespace {

struct FitBasis {
    // one column per basis function; mode_of[c] = catalogue mode index,
    // is_sin[c] marks the sin partner of an oscillating mode
    std::vector<int> mode_of;
    std::vector<bool> is_sin;
    int n_cols = 0;
    bool has_const = false;
};

} // namespace

ModeDecomposition fit_modes(const std::vector<double>& times,
                            const std::vector<double>& values,
                            const PoleCatalogue& catalogue, double hbar,
                            const FitModesOptions& opt) {
    if (times.size() != values.size())
        throw FitError("fit_modes: times/values length mismatch");
    if (catalogue.poles.empty())
        throw FitError("fit_modes: empty catalogue");
    const size_t n = times.size();
    const double window = times.back() - times.front();

    // The window has to resolve at least one catalogue channel.
    bool resolvable = false;
    for (const auto& p : catalogue.poles) {
        if (p.omega > 0.0 && window >= 3.0 * 2.0 * M_PI / p.omega) resolvable = true;
        if (p.gamma > 0.0 && window >= 5.0 * hbar / p.gamma) resolvable = true;
    }
    if (!resolvable)
        throw FitError("fit_modes: window resolves no catalogue mode "
                       "(need 3 periods or 5 decay times of some channel)");

    FitBasis fb;
    for (size_t m = 0; m < catalogue.poles.size(); ++m) {
        fb.mode_of.push_back(static_cast<int>(m));
        fb.is_sin.push_back(false);
        if (catalogue.poles[m].omega != 0.0) {
            fb.mode_of.push_back(static_cast<int>(m));
            fb.is_sin.push_back(true);
        }
    }
    fb.has_const = opt.fit_equilibrium;
    fb.n_cols = static_cast<int>(fb.mode_of.size()) + (fb.has_const ? 1 : 0);
    if (static_cast<int>(n) < fb.n_cols)
        throw FitError("fit_modes: underdetermined fit (" + std::to_string(n) +
                       " samples for " + std::to_string(fb.n_cols) + " coefficients)");

    Eigen::MatrixXd M(n, fb.n_cols);
    for (size_t r = 0; r < n; ++r) {
        const double t = times[r];
        int c = 0;
        if (fb.has_const) M(r, c++) = 1.0;
        for (size_t k = 0; k < fb.mode_of.size(); ++k, ++c) {
            const auto& p = catalogue.poles[fb.mode_of[k]];
            const double decay = std::exp(-p.gamma * t / hbar);
            M(r, c) = (fb.is_sin[k] ? std::sin(p.omega * t) : std::cos(p.omega * t)) * decay;
        }
    }
    Eigen::Map<const Eigen::VectorXd> y(values.data(), n);
    const Eigen::VectorXd coef = M.colPivHouseholderQr().solve(y);

    ModeDecomposition out;
    out.hbar = hbar;
    int c = 0;
    if (fb.has_const) out.equilibrium = coef(c++);
    for (size_t m = 0; m < catalogue.poles.size(); ++m) {
        const auto& p = catalogue.poles[m];
        DecayMode mode;
        mode.freq = p.omega;
        mode.gamma = p.gamma;
        if (p.omega != 0.0) {
            const double P = coef(c++);
            const double Q = coef(c++);
            // a(t) = P cos + Q sin = A cos(w t + phi), A >= 0
            mode.amplitude = std::hypot(P, Q);
            mode.phase = std::atan2(-Q, P);
        } else {
            mode.amplitude = coef(c++);
            mode.phase = 0.0;
        }
        out.modes.push_back(mode);
    }
    std::sort(out.modes.begin(), out.modes.end(), [](const DecayMode& a, const DecayMode& b) {
        if (a.gamma != b.gamma) return a.gamma < b.gamma;
        return a.freq < b.freq;
    });

    double ss = 0.0, lo = values[0], hi = values[0];
    for (size_t r = 0; r < n; ++r) {
        const double e = out.value(times[r]) - values[r];
        ss += e * e;
        lo = std::min(lo, values[r]);
        hi = std::max(hi, values[r]);
    }
    out.residual_rms = std::sqrt(ss / n);
    const double range = std::max(hi - lo, 1e-300);
    out.fit_warning = out.residual_rms > opt.residual_tol * range;
    return out;
}

EffectiveMode effective_gamma(const ModeDecomposition& decomp) {
    if (decomp.modes.empty())
        throw ContractError("effective_gamma: decomposition has no modes");
    double num = 0.0, den = 0.0, scale = 0.0;
    for (const auto& m : decomp.modes) {
        const double a0 = m.initial_value();
        num += a0 * m.gamma;
        den += a0;
        scale += std::abs(a0);
    }
    if (std::abs(den) < 1e-12 * std::max(scale, 1e-300))
        throw ContractError("effective_gamma: degenerate weights, sum a_i(0) = 0");
    EffectiveMode eff;
    eff.gamma_eff = num / den;
    for (size_t i = 0; i < decomp.modes.size(); ++i) {
        const double g = decomp.modes[i].gamma;
        if (g <= eff.gamma_eff * (1.0 + 1e-12) + 1e-300)
            eff.slow_indices.push_back(static_cast<int>(i));
        else
            eff.fast_indices.push_back(static_cast<int>(i));
    }
    eff.slow_count = static_cast<int>(eff.slow_indices.size());
    return eff;
}

double decoherence_time(const EffectiveMode& eff, double hbar) {
    if (!(eff.gamma_eff > 0.0))
        throw ContractError("decoherence_time: gamma_eff must be positive");
    return hbar / eff.gamma_eff;
}

PoleCatalogue expectation_mode_catalogue(const ComplexPole& z0, int max_n) {
    if (max_n < 1) throw ContractError("expectation_mode_catalogue: max_n >= 1");
    std::map<std::pair<long long, long long>, ComplexPole> dedup;
    auto add = [&](int n, int m) {
        const double freq = (n - m) * z0.omega;
        const double gamma = 0.5 * (n + m) * z0.gamma;
        // quantize to avoid float-key duplicates
        dedup[{std::llround(freq * 1e12), std::llround(gamma * 1e12)}] =
            ComplexPole{freq, gamma};
    };
    for (int n = 1; n <= max_n; ++n)
        for (int m = 0; m <= n; ++m) // freq >= 0 representative of each pair
            add(n, m);
    PoleCatalogue cat;
    for (auto& [k, p] : dedup) cat.poles.push_back(p);
    std::sort(cat.poles.begin(), cat.poles.end(), [](const ComplexPole& a, const ComplexPole& b) {
        if (a.gamma != b.gamma) return a.gamma < b.gamma;
        return a.omega < b.omega;
    });
    return cat;
}

PoleCatalogue envelope_mode_catalogue(const ComplexPole& z0, int n_max) {
    if (n_max < 1) throw ContractError("envelope_mode_catalogue: n_max >= 1");
    PoleCatalogue cat;
    for (int n = 0; n <= n_max; ++n)
        cat.poles.push_back(ComplexPole{0.0, n * z0.gamma});
    return cat;
}

DensityMatrix privileged_state(const std::vector<ModeDecomposition>& per_observable,
                               const std::vector<Eigen::MatrixXcd>& observables,
                               int slow_count, double t, double* repair_distance) {
    if (per_observable.size() != observables.size() || observables.empty())
        throw ContractError("privileged_state: observables and decompositions must pair up");
    const int d2 = static_cast<int>(observables.size());
    const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d2))));
    if (d * d != d2 || observables[0].rows() != d)
        throw ContractError("privileged_state: observable set is not exhaustive (need dim^2)");
    for (int a = 0; a < d2; ++a)
        for (int b = a; b < d2; ++b) {
            const cplx g = (observables[a].adjoint() * observables[b]).trace();
            const double target = a == b ? 1.0 : 0.0;
            if (std::abs(g - target) > 1e-10)
                throw ContractError("privileged_state: observables not HS-orthonormal");
        }

    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
    for (int k = 0; k < d2; ++k) {
        const auto& dec = per_observable[k];
        double y = dec.equilibrium;
        const int keep = std::min<int>(slow_count, static_cast<int>(dec.modes.size()));
        for (int i = 0; i < keep; ++i) y += dec.modes[i].value(t, dec.hbar);
        rho += y * observables[k];
    }
    rho = hermitize(rho);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    const double tr = ev.sum();
    if (!(tr > 0.0)) throw ContractError("privileged_state: reconstruction has no positive weight");
    ev /= tr;
    Eigen::MatrixXcd repaired =
        es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    if (repair_distance) *repair_distance = (repaired - rho).norm();
    return DensityMatrix::unchecked(std::move(repaired));
}

namespace {

// Orthonormal section through a (possibly degenerate) eigenvector cluster:
// project the previous frame's columns onto the span of the new ones and
// Loewdin-orthonormalize.
Eigen::MatrixXcd transported_section(const Eigen::MatrixXcd& prev_cols,
                                     const Eigen::MatrixXcd& new_cols) {
    const Eigen::MatrixXcd proj = new_cols * (new_cols.adjoint() * prev_cols);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(proj, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

} // namespace

MovingPreferredBasis moving_preferred_basis(const std::vector<double>& times,
                                            const std::vector<DensityMatrix>& series,
                                            double gap_tol) {
    if (times.size() != series.size() || series.empty())
        throw ContractError("moving_preferred_basis: empty or mismatched series");
    MovingPreferredBasis mpb;
    mpb.times = times;
    mpb.gap_tol = gap_tol;
    const int d = series[0].dim();

    for (size_t k = 0; k < series.size(); ++k) {
        if (series[k].dim() != d)
            throw ContractError("moving_preferred_basis: dimension changes along the series");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(series[k].mat);
        // descending weights
        Eigen::VectorXd w = es.eigenvalues().reverse();
        Eigen::MatrixXcd F(d, d);
        for (int c = 0; c < d; ++c) F.col(c) = es.eigenvectors().col(d - 1 - c);

        bool degen = false;
        for (int c = 0; c + 1 < d; ++c)
            if (std::abs(w(c) - w(c + 1)) < gap_tol) degen = true;

        if (k > 0) {
            const Eigen::MatrixXcd& P = mpb.frames.back();
            // greedy maximal-overlap assignment of new columns to previous ones
            Eigen::MatrixXd ovl = (P.adjoint() * F).cwiseAbs();
            std::vector<int> perm(d, -1);
            std::vector<bool> used_row(d, false), used_col(d, false);
            for (int pick = 0; pick < d; ++pick) {
                int bi = -1, bj = -1;
                double best = -1.0;
                for (int i = 0; i < d; ++i) {
                    if (used_row[i]) continue;
                    for (int j = 0; j < d; ++j) {
                        if (used_col[j]) continue;
                        if (ovl(i, j) > best) { best = ovl(i, j); bi = i; bj = j; }
                    }
                }
                perm[bi] = bj;
                used_row[bi] = used_col[bj] = true;
            }
            Eigen::MatrixXcd Fm(d, d);
            Eigen::VectorXd wm(d);
            for (int i = 0; i < d; ++i) {
                Fm.col(i) = F.col(perm[i]);
                wm(i) = w(perm[i]);
            }
            // carry near-degenerate clusters through by parallel transport
            int c0 = 0;
            while (c0 < d) {
                int c1 = c0;
                while (c1 + 1 < d && std::abs(wm(c1) - wm(c1 + 1)) < gap_tol) ++c1;
                if (c1 > c0) {
                    const int len = c1 - c0 + 1;
                    Fm.middleCols(c0, len) = transported_section(
                        P.middleCols(c0, len), Fm.middleCols(c0, len));
                }
                c0 = c1 + 1;
            }
            // positive-real-overlap phase convention
            for (int i = 0; i < d; ++i) {
                const cplx o = P.col(i).dot(Fm.col(i));
                if (std::abs(o) > 1e-14) Fm.col(i) *= std::conj(o) / std::abs(o);
            }
            F = std::move(Fm);
            w = std::move(wm);
        }
        mpb.frames.push_back(std::move(F));
        mpb.weights.push_back(std::move(w));
        mpb.degenerate.push_back(degen ? 1 : 0);
    }
    return mpb;
}

GeneratorSeries effective_generator(const MovingPreferredBasis& mpb, double hbar,
                                    DegeneratePolicy policy) {
    const size_t n = mpb.times.size();
    if (n < 3) throw ContractError("effective_generator: need at least 3 samples");
    GeneratorSeries gs;
    const Eigen::MatrixXcd F0_adj = mpb.frames.front().adjoint();
    for (size_t k = 1; k + 1 < n; ++k) {
        const double dt = mpb.times[k + 1] - mpb.times[k - 1];
        const Eigen::MatrixXcd U = mpb.frames[k] * F0_adj;
        const Eigen::MatrixXcd dU =
            (mpb.frames[k + 1] * F0_adj - mpb.frames[k - 1] * F0_adj) / dt;
        Eigen::MatrixXcd raw = cplx(0.0, hbar) * dU * U.adjoint();
        const double asym = 0.5 * (raw - raw.adjoint()).norm();
        Eigen::MatrixXcd aleph = hermitize(raw);
        bool ok = true;
        if (policy == DegeneratePolicy::gap)
            ok = !(mpb.degenerate[k - 1] || mpb.degenerate[k] || mpb.degenerate[k + 1]);
        gs.times.push_back(mpb.times[k]);
        gs.aleph.push_back(std::move(aleph));
        gs.valid.push_back(ok ? 1 : 0);
        gs.hermiticity_residual.push_back(asym);
    }
    return gs;
}

double linear_entropy(const DensityMatrix& rho) {
    const double tr = std::real(rho.mat.trace());
    const double tr2 = rho.mat.squaredNorm(); // Hermitian: tr(rho^2) = ||rho||_F^2
    return tr - tr2;
}

std::vector<double> entropy_production(const std::vector<double>& times,
                                       const std::vector<DensityMatrix>& series) {
    if (times.size() != series.size() || times.size() < 3)
        throw ContractError("entropy_production: need uniformly sampled series with >= 3 points");
    const size_t n = times.size();
    std::vector<double> out(n);
    auto rate = [&](size_t k, size_t a, size_t b) {
        const Eigen::MatrixXcd drho = (series[b].mat - series[a].mat) / (times[b] - times[a]);
        return -2.0 * std::real((series[k].mat * drho).trace());
    };
    out[0] = rate(0, 0, 1);
    for (size_t k = 1; k + 1 < n; ++k) out[k] = rate(k, k - 1, k + 1);
    out[n - 1] = rate(n - 1, n - 2, n - 1);
    return out;
}

} // namespace qcl
