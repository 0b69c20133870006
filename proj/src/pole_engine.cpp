#include "qcl/pole_engine.hpp"

#include <algorithm>
#include <cmath>

#include "qcl/errors.hpp"

namespace qcl {

void PoleCatalogue::validate() const {
    for (size_t i = 1; i < poles.size(); ++i)
        if (poles[i].gamma < poles[i - 1].gamma)
            throw ContractError("PoleCatalogue: poles not sorted by gamma");
    if (ladder_base) {
        for (size_t n = 0; n < poles.size(); ++n) {
            const double f = static_cast<double>(n + 1);
            if (std::abs(poles[n].omega - f * ladder_base->omega) > 1e-9 * std::max(1.0, std::abs(f * ladder_base->omega)) ||
                std::abs(poles[n].gamma - f * ladder_base->gamma) > 1e-9 * std::max(1.0, f * ladder_base->gamma))
                throw ContractError("PoleCatalogue: ladder entry deviates from n * base");
        }
    }
}

double PoleCatalogue::min_gamma() const {
    if (poles.empty()) throw ContractError("PoleCatalogue: empty catalogue");
    double g = poles.front().gamma;
    for (const auto& p : poles) g = std::min(g, p.gamma);
    return g;
}

cplx self_energy(cplx z, const SpectralDensity& sd, Sheet sheet, double quad_tol) {
    const double a = sd.w_min, b = sd.w_max;
    const double x0 = std::clamp(std::real(z), a, b);
    const bool near_cut = std::abs(std::imag(z)) < 0.1 * (b - a) &&
                          std::real(z) > a - 0.1 * (b - a) &&
                          std::real(z) < b + 0.1 * (b - a);
    cplx sigma;
    if (near_cut) {
        if (sheet == Sheet::first && std::imag(z) == 0.0 && std::real(z) >= a && std::real(z) <= b)
            throw ContractError("self_energy: z on the branch cut with sheet = first");
        // subtract the constant density at x0; the remainder has a removable
        // singularity and the subtracted term integrates in closed form
        const double Jx0 = sd(x0);
        auto reg = [&](double w) -> cplx {
            const cplx den = z - w;
            const double num = sd(w) - Jx0;
            if (std::abs(den) < 1e-300) return 0.0;
            return num / den;
        };
        sigma = adaptive_simpson(reg, a, x0, quad_tol, 48) +
                adaptive_simpson(reg, x0, b, quad_tol, 48) +
                Jx0 * std::log((z - a) / (z - b));
    } else {
        auto f = [&](double w) -> cplx { return sd(w) / (z - w); };
        sigma = adaptive_simpson(f, a, b, quad_tol, 48);
    }
    if (sheet == Sheet::second)
        sigma -= cplx(0.0, 2.0 * M_PI) * sd.J_analytic(z);
    return sigma;
}

cplx perturbative_pole_seed(const SpectralDensity& sd, double omega, double quad_tol) {
    // principal value at omega via the same subtraction, log term is real PV
    const double a = sd.w_min, b = sd.w_max;
    const double Jw = sd(omega);
    auto reg = [&](double w) -> cplx {
        if (std::abs(w - omega) < 1e-300) return 0.0;
        return (sd(w) - Jw) / (omega - w);
    };
    cplx pv = adaptive_simpson(reg, a, omega, quad_tol, 48) +
              adaptive_simpson(reg, omega, b, quad_tol, 48);
    if (omega > a && omega < b) pv += Jw * std::log((omega - a) / (b - omega));
    return cplx(omega + std::real(pv), -M_PI * Jw);
}

ComplexPole find_pole(const SpectralDensity& sd, double omega, cplx guess,
                      double tol, int max_iter, double quad_tol) {
    auto F = [&](cplx z) { return z - omega - self_energy(z, sd, Sheet::second, quad_tol); };
    cplx z = guess;
    cplx fz = F(z);
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(fz) < tol) {
            ComplexPole p;
            p.omega = std::real(z);
            p.gamma = -2.0 * std::imag(z);
            if (p.gamma < 0.0 && p.gamma > -1e-12) p.gamma = 0.0;
            if (p.gamma < 0.0)
                throw ConvergenceError("find_pole: converged to the wrong half-plane", std::abs(fz));
            return p;
        }
        const double h = 1e-6 * std::max(std::abs(z), 1e-3);
        const cplx dF = (F(z + h) - F(z - h)) / (2.0 * h);
        if (std::abs(dF) < 1e-300)
            throw ConvergenceError("find_pole: vanishing derivative", std::abs(fz));
        cplx step = fz / dF;
        // damp until the residual actually drops
        double lambda = 1.0;
        cplx z_next = z - step;
        cplx f_next = F(z_next);
        int backtracks = 0;
        while (std::abs(f_next) > std::abs(fz) && backtracks < 12) {
            lambda *= 0.5;
            z_next = z - lambda * step;
            f_next = F(z_next);
            ++backtracks;
        }
        z = z_next;
        fz = f_next;
    }
    throw ConvergenceError("find_pole: no convergence in " + std::to_string(max_iter) +
                           " iterations, residual " + std::to_string(std::abs(fz)),
                           std::abs(fz));
}

PoleCatalogue pole_ladder(const ComplexPole& z0, int n_max) {
    if (n_max < 1) throw ContractError("pole_ladder: n_max must be >= 1");
    PoleCatalogue cat;
    cat.poles.reserve(n_max);
    for (int n = 1; n <= n_max; ++n)
        cat.poles.push_back(ComplexPole{n * z0.omega, n * z0.gamma});
    cat.ladder_base = z0;
    cat.validate();
    return cat;
}

double relaxation_time(const PoleCatalogue& catalogue, double hbar) {
    const double g0 = catalogue.min_gamma();
    if (g0 <= 0.0)
        throw ContractError("relaxation_time: all widths vanish (unitary limit)");
    return hbar / g0;
}

KhalfinReport khalfin_scan(const std::vector<double>& times,
                           const std::vector<double>& survival_prob,
                           double gamma0, double hbar, double rel_tol) {
    if (times.size() != survival_prob.size() || times.size() < 3)
        throw ContractError("khalfin_scan: need matching series with >= 3 samples");
    KhalfinReport rep;
    rep.flagged.assign(times.size(), 0);
    const double target = -gamma0 / hbar;
    for (size_t k = 1; k + 1 < times.size(); ++k) {
        const double p0 = survival_prob[k - 1], p1 = survival_prob[k + 1];
        if (p0 <= 0.0 || p1 <= 0.0) { rep.flagged[k] = 1; continue; }
        const double rate = (std::log(p1) - std::log(p0)) / (times[k + 1] - times[k - 1]);
        if (std::abs(rate - target) > rel_tol * std::abs(target)) rep.flagged[k] = 1;
    }
    // sustained deviation: three consecutive flagged interior samples
    for (size_t k = 1; k + 3 < times.size(); ++k) {
        if (rep.flagged[k] && rep.flagged[k + 1] && rep.flagged[k + 2]) {
            rep.detected = true;
            rep.onset_time = times[k];
            break;
        }
    }
    return rep;
}

} // namespace qcl
