#include <doctest.h>

#include <cmath>

#include "qcl/numerics.hpp"

using namespace qcl;

TEST_CASE("fornberg weights reproduce the centered first-derivative stencil") {
    std::vector<double> nodes = {-2, -1, 0, 1, 2};
    const auto w = fornberg_weights(0.0, nodes, 1);
    CHECK(w[0] == doctest::Approx(1.0 / 12).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(-8.0 / 12).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w[3] == doctest::Approx(8.0 / 12).epsilon(1e-12));
    CHECK(w[4] == doctest::Approx(-1.0 / 12).epsilon(1e-12));
}

TEST_CASE("fd derivative is exact on degree-7 polynomials including edges") {
    const int n = 32;
    const double h = 0.1;
    Eigen::MatrixXcd f(n, 1), expect(n, 1);
    for (int i = 0; i < n; ++i) {
        const double x = i * h;
        f(i, 0) = std::pow(x, 7) - 3 * std::pow(x, 4) + x;
        expect(i, 0) = 7 * std::pow(x, 6) - 12 * std::pow(x, 3) + 1;
    }
    const Eigen::MatrixXcd d = fd_derivative(f, 0, h);
    CHECK((d - expect).cwiseAbs().maxCoeff() < 1e-7 * expect.cwiseAbs().maxCoeff());
}

TEST_CASE("spectral derivative handles periodic data") {
    const int n = 64;
    const double L = 2 * M_PI;
    Eigen::MatrixXcd f(n, 1);
    for (int i = 0; i < n; ++i) f(i, 0) = std::sin(3.0 * i * L / n);
    const Eigen::MatrixXcd d = spectral_derivative(f, 0, L / n);
    for (int i = 0; i < n; ++i)
        CHECK(std::real(d(i, 0)) == doctest::Approx(3.0 * std::cos(3.0 * i * L / n)).epsilon(1e-9));
}

TEST_CASE("adaptive simpson integrates an oscillatory complex integrand") {
    auto f = [](double x) { return cplx(std::cos(5 * x), std::sin(5 * x)); };
    const cplx got = adaptive_simpson(f, 0.0, 1.0, 1e-13);
    const cplx expect = (std::sin(5.0) / 5.0) + cplx(0, (1 - std::cos(5.0)) / 5.0);
    CHECK(std::abs(got - expect) < 1e-11);
}

TEST_CASE("loglog slope of a power law") {
    std::vector<double> x = {1e-3, 1e-2, 1e-1}, y;
    for (double v : x) y.push_back(2.5 * v * v);
    CHECK(loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("angle unwrapping removes 2pi jumps") {
    std::vector<double> w;
    for (int k = 0; k < 40; ++k) {
        double a = 0.4 * k;
        while (a > M_PI) a -= 2 * M_PI;
        w.push_back(a);
    }
    const auto u = unwrap_angles(w);
    for (int k = 0; k < 40; ++k) CHECK(u[k] == doctest::Approx(0.4 * k).epsilon(1e-12));
}
