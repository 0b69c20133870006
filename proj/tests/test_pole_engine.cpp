#include <doctest.h>

#include <cmath>
#include <random>

#include "qcl/errors.hpp"
#include "qcl/friedrichs.hpp"
#include "qcl/numerics.hpp"
#include "qcl/pole_engine.hpp"

using namespace qcl;

namespace {

// fine-grid Riemann oracle for the self-energy off the cut
cplx riemann_sigma(cplx z, const SpectralDensity& sd, int n = 4'000'000) {
    const double dw = (sd.w_max - sd.w_min) / n;
    cplx acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double w = sd.w_min + (k + 0.5) * dw;
        acc += sd.J(w) / (z - w);
    }
    return acc * dw;
}

double fitted_survival_gamma(double g) {
    const auto band = SpectralDensity::flat_band(g, 0.0, 2.0);
    const double t_R = 1.0 / (2.0 * M_PI * g * g);
    // the fit window must sit below the Poincare recurrence of the
    // discretization, so the bath size grows as the coupling shrinks
    const double t_hi = 1.2 * t_R;
    const int n_modes = std::max(400, static_cast<int>(2.0 * t_hi / M_PI));
    const auto cfg = FriedrichsConfig::from_band(1.0, band, n_modes);
    REQUIRE(t_hi < cfg.recurrence_time());
    const FriedrichsEvolver ev(cfg);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (double t = 0.15 * t_R; t < t_hi; t += t_R / 50) {
        const double y = std::log(ev.survival_probability(t));
        sx += t; sy += y; sxx += t * t; sxy += t * y;
        ++n;
    }
    return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

TEST_CASE("self energy") {
    const auto flat = SpectralDensity::flat_band(0.05, 0.0, 2.0);
    SUBCASE("vanishing density gives zero") {
        const auto zero = SpectralDensity::flat_band(0.0, 0.0, 2.0);
        CHECK(std::abs(self_energy(cplx(0.7, -0.2), zero, Sheet::first)) < 1e-14);
        CHECK(std::abs(self_energy(cplx(0.7, -0.2), zero, Sheet::second)) < 1e-14);
    }
    SUBCASE("band-center limit reproduces the half-residue") {
        // z -> 1 from above: Re -> 0 by symmetry, Im -> -pi J
        const cplx sig = self_energy(cplx(1.0, 1e-9), flat, Sheet::first);
        CHECK(std::abs(std::real(sig)) < 1e-6);
        CHECK(std::imag(sig) == doctest::Approx(-M_PI * 0.0025).epsilon(1e-5));
    }
    SUBCASE("on-cut first-sheet evaluation rejected") {
        CHECK_THROWS_AS(self_energy(cplx(1.0, 0.0), flat, Sheet::first), ContractError);
    }
    SUBCASE("quadrature matches the fine-grid Riemann oracle") {
        const auto para = SpectralDensity::parabolic_band(0.1, 0.2, 1.8);
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> ur(-1.0, 1.0);
        for (int k = 0; k < 4; ++k) {
            const cplx z(1.0 + ur(rng), 0.4 + 0.5 * std::abs(ur(rng)));
            const cplx got = self_energy(z, para, Sheet::first);
            CHECK(std::abs(got - riemann_sigma(z, para)) < 1e-8);
        }
        // near-cut point exercises the principal-value split
        const cplx z(0.9, -1e-4);
        CHECK(std::abs(self_energy(z, para, Sheet::first) - riemann_sigma(z, para)) < 1e-7);
    }
    SUBCASE("Schwarz reflection off the cut") {
        const auto para = SpectralDensity::parabolic_band(0.1, 0.2, 1.8);
        for (const cplx z : {cplx(0.8, 0.3), cplx(1.4, 0.05), cplx(-0.2, 0.7)}) {
            const cplx up = self_energy(z, para, Sheet::first);
            const cplx dn = self_energy(std::conj(z), para, Sheet::first);
            CHECK(std::abs(dn - std::conj(up)) < 1e-10);
        }
    }
    SUBCASE("second-sheet jump is -2 pi i J just below the support") {
        for (double x : {0.5, 1.0, 1.7}) {
            const cplx z(x, -1e-6);
            const cplx jump = self_energy(z, flat, Sheet::second) -
                              self_energy(z, flat, Sheet::first);
            CHECK(std::abs(jump - cplx(0.0, -2.0 * M_PI * 0.0025)) < 1e-8);
        }
    }
    SUBCASE("second sheet is continuous across the cut from above") {
        const double x = 1.3;
        const cplx above = self_energy(cplx(x, 1e-7), flat, Sheet::first);
        const cplx below = self_energy(cplx(x, -1e-7), flat, Sheet::second);
        CHECK(std::abs(above - below) < 1e-5);
    }
}

TEST_CASE("find_pole") {
    SUBCASE("free resonance for vanishing coupling") {
        const auto zero = SpectralDensity::flat_band(0.0, 0.0, 2.0);
        const ComplexPole p = find_pole(zero, 1.0, cplx(1.0, -1e-3));
        CHECK(p.omega == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(p.gamma == doctest::Approx(0.0));
    }
    SUBCASE("flat mid-band width is 2 pi g^2 and matches the exact decay") {
        const auto flat = SpectralDensity::flat_band(0.05, 0.0, 2.0);
        const ComplexPole p = find_pole(flat, 1.0, perturbative_pole_seed(flat, 1.0));
        CHECK(p.gamma == doctest::Approx(2.0 * M_PI * 0.0025).epsilon(0.05));
        CHECK(p.omega == doctest::Approx(1.0).epsilon(1e-4));
        const double fitted = fitted_survival_gamma(0.05);
        CHECK(p.gamma == doctest::Approx(fitted).epsilon(0.05));
    }
    SUBCASE("residual post-condition") {
        const auto flat = SpectralDensity::flat_band(0.08, 0.0, 2.0);
        const ComplexPole p = find_pole(flat, 1.0, perturbative_pole_seed(flat, 1.0));
        const cplx res = p.z() - 1.0 - self_energy(p.z(), flat, Sheet::second);
        CHECK(std::abs(res) < 1e-10);
    }
    SUBCASE("root polish moves the perturbative seed by O(g^4)") {
        std::vector<double> gs = {0.02, 0.05, 0.1}, moves;
        for (double g : gs) {
            const auto flat = SpectralDensity::flat_band(g, 0.0, 2.0);
            const cplx seed = perturbative_pole_seed(flat, 1.0);
            const ComplexPole p = find_pole(flat, 1.0, seed);
            moves.push_back(std::abs(p.z() - seed));
        }
        CHECK(loglog_slope(gs, moves) == doctest::Approx(4.0).epsilon(0.15));
    }
    SUBCASE("pole stable under quadrature refinement") {
        const auto para = SpectralDensity::parabolic_band(0.07, 0.0, 2.0);
        const ComplexPole a = find_pole(para, 1.0, perturbative_pole_seed(para, 1.0),
                                        1e-10, 100, 1e-10);
        const ComplexPole b = find_pole(para, 1.0, perturbative_pole_seed(para, 1.0),
                                        1e-10, 100, 1e-13);
        CHECK(std::abs(a.z() - b.z()) < 1e-6 * std::abs(b.z()));
    }
    SUBCASE("weak-coupling width scales as g^2") {
        std::vector<double> gs = {0.01, 0.02, 0.05, 0.1}, gammas;
        for (double g : gs) gammas.push_back(fitted_survival_gamma(g));
        CHECK(loglog_slope(gs, gammas) == doctest::Approx(2.0).epsilon(0.025));
    }
}

TEST_CASE("pole ladder") {
    const ComplexPole z0{1.0, 0.1};
    SUBCASE("entries are n z0") {
        const PoleCatalogue cat = pole_ladder(z0, 3);
        REQUIRE(cat.poles.size() == 3);
        CHECK(cat.poles[0].omega == doctest::Approx(1.0));
        CHECK(cat.poles[0].gamma == doctest::Approx(0.1));
        CHECK(cat.poles[1].omega == doctest::Approx(2.0));
        CHECK(cat.poles[1].gamma == doctest::Approx(0.2));
        CHECK(cat.poles[2].omega == doctest::Approx(3.0));
        CHECK(cat.poles[2].gamma == doctest::Approx(0.3));
        CHECK(cat.ladder_base.has_value());
    }
    SUBCASE("single entry") {
        const PoleCatalogue cat = pole_ladder(z0, 1);
        CHECK(cat.poles.size() == 1);
    }
    SUBCASE("widths strictly increase along the ladder") {
        const PoleCatalogue cat = pole_ladder(z0, 6);
        for (size_t n = 1; n < cat.poles.size(); ++n)
            CHECK(cat.poles[n].gamma > cat.poles[n - 1].gamma);
    }
    SUBCASE("n_max < 1 rejected") { CHECK_THROWS_AS(pole_ladder(z0, 0), ContractError); }
}

TEST_CASE("relaxation time") {
    SUBCASE("direct quotient") {
        PoleCatalogue cat;
        cat.poles = {{1.0, 0.1}};
        CHECK(relaxation_time(cat, 1.0) == doctest::Approx(10.0));
    }
    SUBCASE("minimum width selected") {
        PoleCatalogue cat;
        cat.poles = {{1.0, 0.5}, {2.0, 1.0}, {3.0, 2.0}};
        CHECK(relaxation_time(cat, 1.0) == doctest::Approx(2.0));
    }
    SUBCASE("unitary limit rejected") {
        PoleCatalogue cat;
        cat.poles = {{1.0, 0.0}};
        CHECK_THROWS_AS(relaxation_time(cat, 1.0), ContractError);
    }
    SUBCASE("consistent with the 1/e time of the exact envelope") {
        const auto flat = SpectralDensity::flat_band(0.05, 0.0, 2.0);
        const ComplexPole p = find_pole(flat, 1.0, perturbative_pole_seed(flat, 1.0));
        const double t_R = relaxation_time(pole_ladder(p, 3), 1.0);
        const auto cfg = FriedrichsConfig::from_band(1.0, flat, 400);
        const FriedrichsEvolver ev(cfg);
        // bisect |A|^2 = 1/e
        double lo = 0.0, hi = 4.0 * t_R;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (ev.survival_probability(mid) > std::exp(-1.0) ? lo : hi) = mid;
        }
        CHECK(0.5 * (lo + hi) == doctest::Approx(t_R).epsilon(0.1));
    }
}

TEST_CASE("khalfin scan") {
    // exponential channel plus a weak power-law tail that takes over late
    const double gamma0 = 0.05, hbar = 1.0;
    std::vector<double> times, clean, tailed;
    for (int k = 0; k <= 400; ++k) {
        const double t = k * 0.5;
        times.push_back(t);
        const double e = std::exp(-gamma0 * t);
        clean.push_back(e);
        tailed.push_back(e + 36.0 / std::pow(50.0 + t, 2));
    }
    const KhalfinReport ok = khalfin_scan(times, clean, gamma0, hbar);
    CHECK_FALSE(ok.detected);
    const KhalfinReport bad = khalfin_scan(times, tailed, gamma0, hbar);
    CHECK(bad.detected);
    CHECK(bad.onset_time > 50.0);
    CHECK(bad.onset_time < 190.0);
}
