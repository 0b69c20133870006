#include "qcl/numerics.hpp"

#include <cmath>

#include <unsupported/Eigen/FFT>

#include "qcl/errors.hpp"

namespace qcl {

std::vector<double> fornberg_weights(double x0, const std::vector<double>& nodes, int order) {
    const int n = static_cast<int>(nodes.size());
    if (order >= n)
        throw ContractError("fornberg_weights: stencil too small for requested order");
    // B. Fornberg, Math. Comp. 51 (1988): weights c[j][k] for the k-th
    // derivative at x0 from nodes[0..i]; the new row i must be filled from
    // the old row i-1 before that row is updated.
    std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
    c[0][0] = 1.0;
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) w[j] = c[j][order];
    return w;
}

namespace {

// Cache of 9-point first-derivative stencils for a unit-spaced grid: row t is
// the stencil with the evaluation point at node t (t = 4 is centered).
const std::vector<std::vector<double>>& unit_stencils() {
    static const std::vector<std::vector<double>> table = [] {
        std::vector<std::vector<double>> rows;
        std::vector<double> nodes(9);
        for (int t = 0; t < 9; ++t) {
            for (int k = 0; k < 9; ++k) nodes[k] = static_cast<double>(k - t);
            rows.push_back(fornberg_weights(0.0, nodes, 1));
        }
        return rows;
    }();
    return table;
}

} // namespace

Eigen::MatrixXcd fd_derivative(const Eigen::MatrixXcd& f, int axis, double spacing) {
    const auto& st = unit_stencils();
    const int nr = static_cast<int>(f.rows());
    const int nc = static_cast<int>(f.cols());
    const int n = axis == 0 ? nr : nc;
    if (n < 9) throw ContractError("fd_derivative: need at least 9 samples along the axis");
    Eigen::MatrixXcd out(nr, nc);
    const double inv = 1.0 / spacing;
    auto line_value = [&](int fixed, int k) -> cplx {
        return axis == 0 ? f(k, fixed) : f(fixed, k);
    };
    auto set_value = [&](int fixed, int k, cplx v) {
        if (axis == 0) out(k, fixed) = v; else out(fixed, k) = v;
    };
    const int nfixed = axis == 0 ? nc : nr;
    for (int fixed = 0; fixed < nfixed; ++fixed) {
        for (int k = 0; k < n; ++k) {
            int t = 4;            // offset of evaluation point within stencil
            int base = k - 4;     // first stencil node
            if (k < 4) { t = k; base = 0; }
            else if (k > n - 5) { t = 9 - (n - k); base = n - 9; }
            cplx acc = 0.0;
            const auto& w = st[t];
            for (int s = 0; s < 9; ++s) acc += w[s] * line_value(fixed, base + s);
            set_value(fixed, k, acc * inv);
        }
    }
    return out;
}

void fft(Eigen::VectorXcd& data, bool inverse) {
    static thread_local Eigen::FFT<double> engine;
    Eigen::VectorXcd out(data.size());
    if (inverse) {
        engine.inv(out, data);
        out *= static_cast<double>(data.size()); // unnormalized inverse
    } else {
        engine.fwd(out, data);
    }
    data.swap(out);
}

Eigen::MatrixXcd spectral_derivative(const Eigen::MatrixXcd& f, int axis, double spacing) {
    const int nr = static_cast<int>(f.rows());
    const int nc = static_cast<int>(f.cols());
    const int n = axis == 0 ? nr : nc;
    Eigen::MatrixXcd out = f;
    const double dk = 2.0 * M_PI / (n * spacing);
    Eigen::VectorXcd line(n);
    const int nfixed = axis == 0 ? nc : nr;
    for (int fixed = 0; fixed < nfixed; ++fixed) {
        for (int k = 0; k < n; ++k) line(k) = axis == 0 ? f(k, fixed) : f(fixed, k);
        fft(line, false);
        for (int k = 0; k < n; ++k) {
            int kc = k <= n / 2 ? k : k - n;
            if (k == n / 2) kc = 0; // drop the unmatched Nyquist mode
            line(k) *= cplx(0.0, kc * dk);
        }
        fft(line, true);
        line /= static_cast<double>(n);
        for (int k = 0; k < n; ++k) {
            if (axis == 0) out(k, fixed) = line(k); else out(fixed, k) = line(k);
        }
    }
    return out;
}

namespace {

cplx simpson(const std::function<cplx(double)>& f, double a, double fa_, double b,
             cplx fa, cplx fm, cplx fb, cplx whole, double tol, int depth) {
    (void)fa_;
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const cplx flm = f(lm), frm = f(rm);
    const cplx left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const cplx right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const cplx delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson(f, a, 0, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, 0, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

cplx adaptive_simpson(const std::function<cplx(double)>& f, double a, double b,
                      double tol, int max_depth) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const cplx fa = f(a), fm = f(m), fb = f(b);
    const cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, 0, b, fa, fm, fb, whole, tol, max_depth);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ContractError("loglog_slope: need matching series with >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0 || y[i] <= 0)
            throw ContractError("loglog_slope: values must be positive");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> unwrap_angles(const std::vector<double>& wrapped) {
    std::vector<double> out = wrapped;
    for (size_t i = 1; i < out.size(); ++i) {
        double d = out[i] - out[i - 1];
        while (d > M_PI) { out[i] -= 2.0 * M_PI; d = out[i] - out[i - 1]; }
        while (d <= -M_PI) { out[i] += 2.0 * M_PI; d = out[i] - out[i - 1]; }
    }
    return out;
}

std::vector<double> linspace(double t0, double t1, int n) {
    if (n < 2) throw ContractError("linspace: need n >= 2");
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = t0 + (t1 - t0) * i / (n - 1);
    return t;
}

std::vector<double> logspace(double a, double b, int n) {
    if (a <= 0 || b <= 0) throw ContractError("logspace: endpoints must be positive");
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i)
        t[i] = std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (n - 1));
    return t;
}

} // namespace qcl
