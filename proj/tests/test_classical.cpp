#include <doctest.h>

#include <cmath>

#include "qcl/classical_limit.hpp"
#include "qcl/errors.hpp"
#include "qcl/numerics.hpp"

using namespace qcl;

namespace {

PhaseSpaceFunction constant_field(const PhaseSpaceGrid& g, double v) {
    return PhaseSpaceFunction::sample(g, [v](double, double) { return cplx(v, 0.0); });
}

// analytic annulus indicator in scaled radius
Domain annulus_domain(const PhaseSpaceGrid& g, double r_lo, double r_hi, double mass,
                      double omega) {
    const auto f = PhaseSpaceFunction::sample(g, [&](double x, double p) {
        const double r = std::hypot(x * std::sqrt(mass * omega), p / std::sqrt(mass * omega));
        return cplx(r >= r_lo && r < r_hi ? 1.0 : 0.0, 0.0);
    });
    return characteristic_domain(f, 0.5);
}

} // namespace

TEST_CASE("projector symbol") {
    const double hbar = 0.05;
    const auto g = PhaseSpaceGrid::conjugate(-2.0, 2.0, 256, hbar);
    SUBCASE("ground-state projector is a Gaussian bump") {
        const Eigen::MatrixXcd proj = fock_band_projector(g, 0, 0, 1.0, 1.0);
        const auto sym = projector_symbol(proj, g);
        CHECK(sym.max_imag() < 1e-9);
        // operator-convention normalization: integral = 2 pi hbar per state
        CHECK(sym.integral() == doctest::Approx(2.0 * M_PI * hbar).epsilon(1e-6));
        double worst = 0.0;
        for (int i = 0; i < g.n_x; i += 2)
            for (int j = 0; j < g.n_p; j += 2) {
                const double x = g.x(i), p = g.p(j);
                const double expect = 2.0 * std::exp(-(x * x + p * p) / hbar);
                worst = std::max(worst, std::abs(std::real(sym.values(i, j)) - expect));
            }
        CHECK(worst < 1e-6);
    }
    SUBCASE("non-idempotent input rejected") {
        Eigen::MatrixXcd half = 0.5 * Eigen::MatrixXcd::Identity(g.n_x, g.n_x);
        CHECK_THROWS_AS(projector_symbol(half, g), ContractError);
    }
    SUBCASE("orthogonal band projectors develop vanishing symbol overlap") {
        // Eq.-style disjointness: the pointwise product integral shrinks with hbar
        std::vector<double> hbars = {4e-2, 2e-2, 1e-2}, overlaps;
        for (double hb : hbars) {
            const auto gh = PhaseSpaceGrid::conjugate(-2.0, 2.0, 256, hb);
            const int lo1 = static_cast<int>(std::lround(0.08 / hb));
            const auto p1 = fock_band_projector(gh, 0, lo1, 1.0, 1.0);
            const auto p2 = fock_band_projector(gh, lo1 + 1, 2 * lo1 + 1, 1.0, 1.0);
            const auto s1 = projector_symbol(p1, gh);
            const auto s2 = projector_symbol(p2, gh);
            overlaps.push_back(
                (s1.values.cwiseProduct(s2.values)).cwiseAbs().sum() * gh.cell_area());
        }
        CHECK(overlaps[1] < overlaps[0]);
        CHECK(overlaps[2] < overlaps[1]);
    }
}

TEST_CASE("characteristic domain") {
    const auto g = PhaseSpaceGrid::rectangular(-1.0, 1.0, -1.0, 1.0, 64, 64, 1.0);
    SUBCASE("full-grid unit symbol has normalized volume 1") {
        const Domain d = characteristic_domain(constant_field(g, 1.0));
        CHECK(d.volume == doctest::Approx(1.0));
        CHECK(d.connected);
    }
    SUBCASE("empty mask rejected") {
        CHECK_THROWS_AS(characteristic_domain(constant_field(g, 0.0)), ContractError);
    }
    SUBCASE("disk is connected, two disks are not") {
        const auto disk = PhaseSpaceFunction::sample(g, [](double x, double p) {
            return cplx(std::hypot(x, p) < 0.4 ? 1.0 : 0.0, 0.0);
        });
        CHECK(characteristic_domain(disk).connected);
        const auto pair = PhaseSpaceFunction::sample(g, [](double x, double p) {
            return cplx(std::hypot(x - 0.5, p) < 0.2 || std::hypot(x + 0.5, p) < 0.2 ? 1.0
                                                                                     : 0.0,
                        0.0);
        });
        CHECK_FALSE(characteristic_domain(pair).connected);
    }
    SUBCASE("annular band at small hbar matches the semiclassical area") {
        const double hb = 1e-3;
        const auto gh = PhaseSpaceGrid::conjugate(-0.9, 0.9, 1024, hb);
        const int n_lo = static_cast<int>(std::lround(0.09 / hb));
        const int n_hi = static_cast<int>(std::lround(0.12 / hb));
        const auto proj = fock_band_projector(gh, n_lo, n_hi, 1.0, 1.0);
        const auto sym = projector_symbol(proj, gh);
        const Domain d = characteristic_domain(sym);
        CHECK(d.connected);
        // Bohr-Sommerfeld: 2 pi hbar per state, normalized by the grid volume
        const double states = n_hi - n_lo + 1;
        const double expect = 2.0 * M_PI * hb * states / gh.total_volume();
        CHECK(d.volume == doctest::Approx(expect).epsilon(0.10));
    }
}

TEST_CASE("partition report") {
    const auto g = PhaseSpaceGrid::rectangular(-1.0, 1.0, -1.0, 1.0, 64, 64, 1.0);
    const Domain a = annulus_domain(g, 0.0, 0.3, 1.0, 1.0);
    const Domain b = annulus_domain(g, 0.4, 0.6, 1.0, 1.0);
    SUBCASE("disjoint masks pass") {
        const auto rep = check_partition({a, b});
        CHECK(rep.disjoint);
        CHECK(rep.volume_bounded);
        CHECK(rep.violations.empty());
        CHECK(rep.total_volume == doctest::Approx(a.volume + b.volume));
    }
    SUBCASE("identical masks fail with full overlap") {
        const auto rep = check_partition({a, a});
        CHECK_FALSE(rep.disjoint);
        CHECK(rep.overlap_fraction(0, 1) == doctest::Approx(1.0));
        CHECK_FALSE(rep.violations.empty());
    }
}

TEST_CASE("box average") {
    const auto g = PhaseSpaceGrid::rectangular(-2.0, 2.0, -2.0, 2.0, 128, 128, 1.0);
    SUBCASE("constants factor out") {
        const auto f = constant_field(g, 3.0);
        const auto rho = constant_field(g, 0.25);
        const Box box{0.0, 0.0, 1.0, 1.0};
        // (1/(wx wp)) * c * rho * (box mass as sampled)
        const double cells =
            std::floor(1.0 / g.dx() + 1) * std::floor(1.0 / g.dp() + 1);
        const double expect = 3.0 * 0.25 * cells * g.cell_area() / 1.0;
        CHECK(box_average(f, rho, box) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("characteristic values inside and outside a domain") {
        const auto mask = PhaseSpaceFunction::sample(g, [](double x, double p) {
            return cplx(std::abs(x) < 1.0 && std::abs(p) < 1.0 ? 1.0 : 0.0, 0.0);
        });
        const auto rho = PhaseSpaceFunction::sample(g, [](double x, double p) {
            return cplx(std::abs(x) < 0.3 && std::abs(p) < 0.3 ? 1.0 : 0.0, 0.0);
        });
        const Box inside{0.0, 0.0, 0.7, 0.7};
        const Box outside{1.5, 1.5, 0.4, 0.4};
        const double rho_mass_in_box = 0.6 * 0.6; // as sampled, approx
        const double got = box_average(mask, rho, inside);
        CHECK(got == doctest::Approx(rho_mass_in_box / (0.7 * 0.7)).epsilon(0.05));
        CHECK(box_average(mask, rho, outside) == doctest::Approx(0.0));
    }
    SUBCASE("gaussian moment matches quadrature") {
        // box covers the full Gaussian support: the Riemann sum is
        // spectrally accurate and the frozen oracle value is analytic
        const auto fx = PhaseSpaceFunction::sample(
            g, [](double x, double) { return cplx(x, 0.0); });
        const double x0 = 0.2, s = 0.25;
        const auto rho = PhaseSpaceFunction::sample(g, [&](double x, double p) {
            return cplx(std::exp(-0.5 * (std::pow((x - x0) / s, 2) + std::pow(p / s, 2))) /
                            (2.0 * M_PI * s * s),
                        0.0);
        });
        const Box box{0.0, 0.0, 3.6, 3.6};
        const double expect = x0 / (3.6 * 3.6);
        CHECK(box_average(fx, rho, box) == doctest::Approx(expect).epsilon(1e-6));
    }
    SUBCASE("box outside the grid rejected") {
        CHECK_THROWS_AS(box_average(constant_field(g, 1.0), constant_field(g, 1.0),
                                    Box{2.5, 0.0, 1.0, 1.0}),
                        ContractError);
    }
    SUBCASE("linearity and positivity") {
        const auto f = PhaseSpaceFunction::sample(
            g, [](double x, double p) { return cplx(1.0 + 0.2 * x - 0.1 * p, 0.0); });
        const auto rho = PhaseSpaceFunction::sample(g, [](double x, double p) {
            return cplx(std::exp(-x * x - p * p), 0.0);
        });
        const Box box{0.1, -0.2, 1.0, 0.8};
        const double a1 = box_average(f, rho, box);
        PhaseSpaceFunction f2 = f;
        f2.values *= 2.0;
        CHECK(box_average(f2, rho, box) == doctest::Approx(2.0 * a1).epsilon(1e-12));
        CHECK(a1 > 0.0);
    }
}

TEST_CASE("action-angle from annular domains") {
    const double hbar = 1.0;
    const auto g = PhaseSpaceGrid::conjugate(-5.0, 5.0, 128, hbar);
    const double m = 1.0, w = 1.0;
    std::vector<Domain> family;
    for (int band = 0; band < 3; ++band) {
        const auto proj = fock_band_projector(g, 2 * band, 2 * band + 1, m, w);
        family.push_back(characteristic_domain(projector_symbol(proj, g)));
    }
    SUBCASE("pair is canonical away from the center") {
        const auto pair = action_angle_from_domains(family, m, w);
        CHECK(pair.bracket_residual < 0.05);
        REQUIRE(pair.levels.size() == 3);
        CHECK(pair.levels[0] < pair.levels[1]);
        CHECK(pair.levels[1] < pair.levels[2]);
        // exact canonical pair on the analytic fields at sample points
        const double x = 1.3, p = -0.8;
        const double I = 0.5 * (m * w * x * x + p * p / (m * w));
        const int i = static_cast<int>(std::lround((x - g.x_min) / g.dx()));
        CHECK(std::real(pair.action.values(i, 0)) ==
              doctest::Approx(0.5 * (m * w * g.x(i) * g.x(i) +
                                     g.p(0) * g.p(0) / (m * w))));
        (void)I;
    }
    SUBCASE("non-annular family rejected") {
        // two side-by-side disks violate the radial ordering
        const auto gd = PhaseSpaceGrid::rectangular(-2.0, 2.0, -2.0, 2.0, 64, 64, 1.0);
        const auto disk1 = PhaseSpaceFunction::sample(gd, [](double x, double p) {
            return cplx(std::hypot(x - 0.8, p) < 0.4 ? 1.0 : 0.0, 0.0);
        });
        const auto disk2 = PhaseSpaceFunction::sample(gd, [](double x, double p) {
            return cplx(std::hypot(x + 0.8, p) < 0.4 ? 1.0 : 0.0, 0.0);
        });
        std::vector<Domain> bad = {characteristic_domain(disk1),
                                   characteristic_domain(disk2)};
        CHECK_THROWS_AS(action_angle_from_domains(bad, m, w), GeometryError);
    }
}

TEST_CASE("phase-space evolution") {
    const double hbar = 1.0;
    const auto g = PhaseSpaceGrid::conjugate(-5.0, 5.0, 96, hbar);
    const double m = 1.0, w = 1.0;
    std::vector<Domain> family;
    for (int band = 0; band < 3; ++band) {
        const auto proj = fock_band_projector(g, 2 * band, 2 * band + 1, m, w);
        family.push_back(characteristic_domain(projector_symbol(proj, g)));
    }
    const auto pair = action_angle_from_domains(family, m, w);
    const Box box{1.8, 0.0, 1.0, 1.6};

    SUBCASE("zero generator leaves everything still") {
        GeneratorField gen;
        gen.times = linspace(0.0, 10.0, 21);
        for (size_t k = 0; k < gen.times.size(); ++k)
            gen.fields.push_back(constant_field(g, 0.0));
        const auto traj = evolve_phase_space(gen, pair, box);
        for (size_t k = 0; k < traj.times.size(); ++k) {
            CHECK(traj.pi_bar[k] == doctest::Approx(traj.pi_bar[0]).epsilon(1e-12));
            CHECK(traj.phi_bar[k] == doctest::Approx(traj.phi_bar[0]).epsilon(1e-12));
        }
    }
    SUBCASE("harmonic generator: action frozen, angle advancing at w") {
        GeneratorField gen;
        gen.times = linspace(0.0, 12.0, 49);
        const auto harm = PhaseSpaceFunction::sample(g, [&](double x, double p) {
            return cplx(w * 0.5 * (m * w * x * x + p * p / (m * w)), 0.0);
        });
        for (size_t k = 0; k < gen.times.size(); ++k) gen.fields.push_back(harm);
        const auto traj = evolve_phase_space(gen, pair, box, nullptr, {.substeps = 8});
        for (size_t k = 0; k < traj.times.size(); ++k) {
            CHECK(std::abs(traj.pi_bar[k] - traj.pi_bar[0]) < 1e-4 * traj.pi_bar[0]);
            CHECK(traj.phi_bar[k] == doctest::Approx(traj.phi_bar[0] + w * gen.times[k])
                                          .epsilon(1e-3));
        }
    }
    SUBCASE("trajectory leaving the grid raises with the exit time") {
        GeneratorField gen;
        gen.times = linspace(0.0, 40.0, 11);
        // a uniform push in +x: aleph = -c p
        const auto push = PhaseSpaceFunction::sample(
            g, [](double, double p) { return cplx(0.6 * p, 0.0); });
        for (size_t k = 0; k < gen.times.size(); ++k) gen.fields.push_back(push);
        CHECK_THROWS_AS(evolve_phase_space(gen, pair, box), TrajectoryError);
    }
}

TEST_CASE("trajectory surfaces and equilibrium detection") {
    SUBCASE("constant action with linear winding never settles") {
        Trajectory traj;
        traj.times = linspace(0.0, 50.0, 200);
        for (double t : traj.times) {
            traj.pi_bar.push_back(2.0);
            traj.phi_bar.push_back(0.7 * t);
        }
        const auto rep = trajectory_surfaces(traj, {.rate_fraction = 1e-3, .window = 5.0});
        CHECK_FALSE(rep.reached);
    }
    SUBCASE("exponentially settling series raises the flag at the right time") {
        Trajectory traj;
        traj.times = linspace(0.0, 60.0, 600);
        const double rate = 0.25;
        for (double t : traj.times) {
            traj.pi_bar.push_back(2.0 + 0.3 * std::exp(-rate * t));
            traj.phi_bar.push_back(5.0 * (1.0 - std::exp(-rate * t)));
        }
        const auto rep = trajectory_surfaces(traj, {.rate_fraction = 1e-3, .window = 6.0});
        CHECK(rep.reached);
        // rates drop below 1e-3 of the initial scale around t = ln(1000)/rate
        const double expect = std::log(1000.0) / rate;
        CHECK(rep.time > expect * 0.7);
        CHECK(rep.time < expect + 6.0 + 8.0);
    }
}

TEST_CASE("mask star-idempotency defect shrinks quadratically in hbar") {
    // the characteristic function of an annulus is the hbar -> 0 limit
    // object; its truncated-star defect on a fixed grid is pure Moyal
    // correction and scales between hbar^2 and hbar^4
    const auto g = PhaseSpaceGrid::rectangular(-1.5, 1.5, -1.5, 1.5, 128, 128, 1.0);
    const auto mask = PhaseSpaceFunction::sample(g, [](double x, double p) {
        const double r = std::hypot(x, p);
        return cplx(r >= 0.5 && r < 1.0 ? 1.0 : 0.0, 0.0);
    });
    std::vector<double> hbars = logspace(1e-3, 1e-1, 5), defects;
    for (double hb : hbars) {
        PhaseSpaceFunction m = mask;
        m.grid.hbar = hb;
        const auto sq = star_product(m, m);
        defects.push_back((sq.values - m.values).cwiseAbs().sum() * g.cell_area());
    }
    const double slope = loglog_slope(hbars, defects);
    CHECK(slope >= 1.8);
    for (size_t k = 1; k < defects.size(); ++k) CHECK(defects[k] > defects[k - 1]);
}
