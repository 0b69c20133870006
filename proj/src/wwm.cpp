#include "qcl/wwm.hpp"

#include <cmath>

#include "qcl/errors.hpp"

namespace qcl {

namespace {

inline int wrap(int k, int n) { return ((k % n) + n) % n; }

// Midpoint interpolation weights: value at 0 from nodes {-3.5, ..., +3.5}.
// interpolation stencil width for the half-separation kernel samples
constexpr int kInterpW = 12;

const std::vector<double>& midpoint_weights() {
    static const std::vector<double> w = [] {
        std::vector<double> nodes(kInterpW);
        for (int k = 0; k < kInterpW; ++k) nodes[k] = k - 0.5 * (kInterpW - 1);
        return fornberg_weights(0.0, nodes, 0);
    }();
    return w;
}

} // namespace

void PhaseSpaceGrid::validate() const {
    if (n_x < 16 || n_p < 16) throw GridError("PhaseSpaceGrid: n_x, n_p must be >= 16");
    if (!(x_max > x_min) || !(p_max > p_min)) throw GridError("PhaseSpaceGrid: empty box");
    if (!(hbar > 0.0)) throw GridError("PhaseSpaceGrid: hbar must be positive");
}

bool PhaseSpaceGrid::conjugate_layout() const {
    if (n_p != 2 * n_x) return false;
    const double dp_ref = M_PI * hbar / (n_x * dx());
    if (std::abs(dp() - dp_ref) > 1e-12 * dp_ref) return false;
    return std::abs(p_min + 0.5 * n_p * dp()) < 1e-9 * dp();
}

PhaseSpaceGrid PhaseSpaceGrid::conjugate(double x_min, double x_max, int n_x, double hbar) {
    PhaseSpaceGrid g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n_x = n_x;
    g.n_p = 2 * n_x;
    g.hbar = hbar;
    const double dp = M_PI * hbar / (n_x * g.dx());
    g.p_min = -0.5 * g.n_p * dp;
    g.p_max = 0.5 * g.n_p * dp;
    g.validate();
    return g;
}

PhaseSpaceGrid PhaseSpaceGrid::rectangular(double x_min, double x_max, double p_min,
                                           double p_max, int n_x, int n_p, double hbar) {
    PhaseSpaceGrid g;
    g.x_min = x_min; g.x_max = x_max;
    g.p_min = p_min; g.p_max = p_max;
    g.n_x = n_x; g.n_p = n_p;
    g.hbar = hbar;
    g.validate();
    return g;
}

double PhaseSpaceFunction::integral() const {
    return values.real().sum() * grid.cell_area();
}

double PhaseSpaceFunction::abs_integral() const {
    return values.cwiseAbs().sum() * grid.cell_area();
}

double PhaseSpaceFunction::max_imag() const {
    return values.imag().cwiseAbs().maxCoeff();
}

PhaseSpaceFunction PhaseSpaceFunction::real_part() const {
    PhaseSpaceFunction out{grid, values.real().cast<cplx>()};
    return out;
}

PhaseSpaceFunction PhaseSpaceFunction::sample(const PhaseSpaceGrid& g,
                                              const std::function<cplx(double, double)>& f) {
    PhaseSpaceFunction out;
    out.grid = g;
    out.values.resize(g.n_x, g.n_p);
    for (int i = 0; i < g.n_x; ++i)
        for (int j = 0; j < g.n_p; ++j) out.values(i, j) = f(g.x(i), g.p(j));
    return out;
}

// Kernel row at center index i: even separations r = 2m from matrix entries,
// odd separations from a high-order midpoint interpolation along the center.
// Out-of-range indices contribute zero: the operator is treated as supported
// on the box, which keeps confined states free of periodic-image fringes and
// makes the boundary-mass checks meaningful.
static void kernel_row(const Eigen::MatrixXcd& op, int i, Eigen::VectorXcd& row) {
    const int n = static_cast<int>(op.rows());
    const int N = 2 * n;
    const auto& w = midpoint_weights();
    row.setZero(N);
    auto entry = [&](int a, int b) -> cplx {
        if (a < 0 || a >= n || b < 0 || b >= n) return 0.0;
        return op(a, b);
    };
    for (int r = -n + 1; r < n; ++r) {
        const int rr = wrap(r, N);
        if ((r & 1) == 0) {
            const int m = r / 2;
            row(rr) = entry(i + m, i - m);
        } else {
            const int m = (r - 1) / 2; // r = 2m + 1
            cplx acc = 0.0;
            for (int k = 0; k < kInterpW; ++k) {
                const int off = k - kInterpW / 2; // centers i + off + 1/2
                acc += w[k] * entry(i + off + m + 1, i + off - m);
            }
            row(rr) = acc;
        }
    }
}

PhaseSpaceFunction wigner_transform(const Eigen::MatrixXcd& op, const PhaseSpaceGrid& grid) {
    grid.validate();
    if (!grid.conjugate_layout())
        throw GridError("wigner_transform: grid p axis is not the conjugate layout");
    const int n = grid.n_x;
    if (op.rows() != n || op.cols() != n)
        throw GridError("wigner_transform: operator dimension does not match grid");
    const int N = 2 * n;
    PhaseSpaceFunction out;
    out.grid = grid;
    out.values.resize(n, N);
    Eigen::VectorXcd row(N);
    for (int i = 0; i < n; ++i) {
        kernel_row(op, i, row);
        // OUT[q] = sum_r row[r] e^{-2 pi i q r / N}; the sign orients the p
        // axis so that symb(P) = +p and symb(X P) = xp + i hbar/2
        fft(row, false);
        for (int j = 0; j < N; ++j) out.values(i, j) = row(wrap(j - n, N));
    }
    return out;
}

PhaseSpaceFunction wigner_state(const Eigen::MatrixXcd& rho, const PhaseSpaceGrid& grid,
                                double boundary_tol) {
    const double tr_err = std::abs(rho.trace() - cplx(1.0, 0.0));
    if (tr_err > 1e-8)
        throw ContractError("wigner_state: state trace deviates from 1 by " +
                            std::to_string(tr_err));
    // position-support check before transforming
    const int n = static_cast<int>(rho.rows());
    const int band = std::max(1, n / 32);
    double tail = 0.0;
    for (int i = 0; i < band; ++i)
        tail += std::abs(rho(i, i)) + std::abs(rho(n - 1 - i, n - 1 - i));
    if (tail > boundary_tol)
        throw GridError("wigner_state: position boundary mass " + std::to_string(tail));
    // momentum-support check from the exact momentum-representation marginal
    const int kband = std::max(1, n / 32);
    double ptail = 0.0;
    for (int s = 0; s < kband; ++s) {
        for (int k : {n / 2 - 1 - s, -n / 2 + s}) {
            Eigen::VectorXcd plane(n);
            for (int a = 0; a < n; ++a)
                plane(a) = std::exp(cplx(0.0, 2.0 * M_PI * k * a / n)) / std::sqrt(double(n));
            ptail += std::abs(plane.dot(rho * plane));
        }
    }
    if (ptail > boundary_tol)
        throw GridError("wigner_state: momentum boundary mass " + std::to_string(ptail));
    PhaseSpaceFunction f = wigner_transform(rho, grid);
    f.values /= 2.0 * M_PI * grid.hbar;
    return f;
}

Eigen::MatrixXcd weyl_quantize(const PhaseSpaceFunction& f, bool check_aliasing,
                               double aliasing_tol) {
    const PhaseSpaceGrid& grid = f.grid;
    if (!grid.conjugate_layout())
        throw GridError("weyl_quantize: grid p axis is not the conjugate layout");
    const int n = grid.n_x;
    const int N = 2 * n;

    // interpolation stencils for half-integer centers, one-sided at the box
    // edges so polynomial symbols reconstruct exactly everywhere
    static thread_local std::vector<std::vector<double>> half_stencils;
    if (half_stencils.empty()) {
        half_stencils.resize(kInterpW);
        std::vector<double> nodes(kInterpW);
        for (int t = 0; t < kInterpW; ++t) {
            for (int k = 0; k < kInterpW; ++k) nodes[k] = static_cast<double>(k);
            half_stencils[t] = fornberg_weights(t + 0.5, nodes, 0);
        }
    }

    // kernel rows at integer centers
    Eigen::MatrixXcd K(n, N);
    Eigen::VectorXcd line(N);
    for (int i = 0; i < n; ++i) {
        for (int q = 0; q < N; ++q) line(q) = f.values(i, wrap(q + n, N));
        fft(line, true);
        K.row(i) = line.transpose() / static_cast<double>(N);
    }
    // kernel rows at half-integer centers i + 1/2, interpolated along x
    Eigen::MatrixXcd Kh(n - 1 > 0 ? n : 1, N);
    Eigen::VectorXcd hline(N);
    for (int i = 0; i + 1 < n; ++i) {
        const int base = std::clamp(i - (kInterpW / 2 - 1), 0, n - kInterpW);
        const auto& st = half_stencils[i - base];
        for (int q = 0; q < N; ++q) {
            cplx acc = 0.0;
            for (int k = 0; k < kInterpW; ++k)
                acc += st[k] * f.values(base + k, wrap(q + n, N));
            hline(q) = acc;
        }
        fft(hline, true);
        Kh.row(i) = hline.transpose() / static_cast<double>(N);
    }

    // every matrix entry has a unique kernel source: integer centers carry
    // the even separations, half-integer centers the odd ones
    Eigen::MatrixXcd op(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const int r = a - b;
            if (((a + b) & 1) == 0)
                op(a, b) = K((a + b) / 2, wrap(r, N));
            else
                op(a, b) = Kh((a + b - 1) / 2, wrap(r, N));
        }

    if (check_aliasing) {
        const PhaseSpaceFunction back = wigner_transform(op, grid);
        const double scale = std::max(1.0, f.values.cwiseAbs().maxCoeff());
        const double err = (back.values - f.values).cwiseAbs().maxCoeff() / scale;
        if (err > aliasing_tol)
            throw GridError("weyl_quantize: round-trip residual " + std::to_string(err) +
                            " indicates unresolved content");
    }
    return op;
}

namespace {

Eigen::MatrixXcd derivative(const Eigen::MatrixXcd& v, int axis, double h,
                            DerivativeBackend backend) {
    return backend == DerivativeBackend::finite_difference ? fd_derivative(v, axis, h)
                                                           : spectral_derivative(v, axis, h);
}

// Cache of mixed partials d_x^a d_p^b up to total order K.
struct PartialTable {
    std::vector<std::vector<Eigen::MatrixXcd>> d; // d[a][b]
    PartialTable(const PhaseSpaceFunction& f, int K, DerivativeBackend backend) {
        d.assign(K + 1, {});
        d[0].push_back(f.values);
        for (int b = 1; b <= K; ++b)
            d[0].push_back(derivative(d[0][b - 1], 1, f.grid.dp(), backend));
        for (int a = 1; a <= K; ++a) {
            d[a].push_back(derivative(d[a - 1][0], 0, f.grid.dx(), backend));
            for (int b = 1; b + a <= K; ++b)
                d[a].push_back(derivative(d[a][b - 1], 1, f.grid.dp(), backend));
        }
    }
    const Eigen::MatrixXcd& at(int a, int b) const { return d[a][b]; }
};

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Pi^k(f, g) = sum_j (-1)^j C(k,j) (d_x^{k-j} d_p^j f)(d_x^j d_p^{k-j} g)
Eigen::MatrixXcd poisson_power(const PartialTable& F, const PartialTable& G, int k) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(F.at(0, 0).rows(), F.at(0, 0).cols());
    for (int j = 0; j <= k; ++j) {
        const double c = ((j & 1) ? -1.0 : 1.0) * binom(k, j);
        acc += c * F.at(k - j, j).cwiseProduct(G.at(j, k - j));
    }
    return acc;
}

void require_same_grid(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                       const char* who) {
    const auto& a = f.grid;
    const auto& b = g.grid;
    if (a.n_x != b.n_x || a.n_p != b.n_p || a.x_min != b.x_min || a.x_max != b.x_max ||
        a.p_min != b.p_min || a.p_max != b.p_max || a.hbar != b.hbar)
        throw GridError(std::string(who) + ": grid mismatch");
}

void check_coefficient_decay(const PartialTable& T, const PhaseSpaceGrid& g, int K) {
    // truncated-series sanity: the scaled top-order term must stay below the
    // function scale, otherwise the derivatives are blowing up on this grid
    const double base = T.at(0, 0).cwiseAbs().maxCoeff();
    double factor = 1.0;
    for (int k = 1; k <= K; ++k) factor *= 0.5 * g.hbar / k;
    const double top = factor * (T.at(K, 0).cwiseAbs().maxCoeff() +
                                 T.at(0, K).cwiseAbs().maxCoeff());
    if (top > base)
        throw ContractError("star_product: derivative blow-up, series coefficients "
                            "are not decaying on this grid");
}

} // namespace

PhaseSpaceFunction star_product(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                const StarOptions& opt) {
    require_same_grid(f, g, "star_product");
    if (opt.order < 0) throw ContractError("star_product: order must be >= 0");
    const int K = opt.order;
    PartialTable F(f, K, opt.backend), G(g, K, opt.backend);
    if (opt.check_smoothness && opt.backend == DerivativeBackend::spectral) {
        check_coefficient_decay(F, f.grid, K);
        check_coefficient_decay(G, f.grid, K);
    }
    PhaseSpaceFunction out;
    out.grid = f.grid;
    out.values = f.values.cwiseProduct(g.values);
    cplx coef(1.0, 0.0);
    for (int k = 1; k <= K; ++k) {
        coef *= cplx(0.0, 0.5 * f.grid.hbar) / static_cast<double>(k);
        out.values += coef * poisson_power(F, G, k);
    }
    return out;
}

PhaseSpaceFunction moyal_bracket(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                 const StarOptions& opt) {
    require_same_grid(f, g, "moyal_bracket");
    const int K = std::max(1, opt.order);
    PartialTable F(f, K, opt.backend), G(g, K, opt.backend);
    PhaseSpaceFunction out;
    out.grid = f.grid;
    out.values = poisson_power(F, G, 1);
    // odd orders only: (2/(i hbar)) (1/k!) (i hbar/2)^k = (1/k!) (i hbar/2)^{k-1}
    double kfact = 1.0;
    for (int k = 3; k <= K; k += 2) {
        kfact *= (k - 1) * k;
        const cplx coef = std::pow(cplx(0.0, 0.5 * f.grid.hbar), k - 1) / kfact;
        out.values += coef * poisson_power(F, G, k);
    }
    return out;
}

PhaseSpaceFunction poisson_bracket(const PhaseSpaceFunction& f, const PhaseSpaceFunction& g,
                                   DerivativeBackend backend) {
    require_same_grid(f, g, "poisson_bracket");
    PhaseSpaceFunction out;
    out.grid = f.grid;
    out.values =
        derivative(f.values, 0, f.grid.dx(), backend)
            .cwiseProduct(derivative(g.values, 1, f.grid.dp(), backend)) -
        derivative(f.values, 1, f.grid.dp(), backend)
            .cwiseProduct(derivative(g.values, 0, f.grid.dx(), backend));
    return out;
}

double trace_pairing(const PhaseSpaceFunction& state_symbol,
                     const PhaseSpaceFunction& op_symbol) {
    require_same_grid(state_symbol, op_symbol, "trace_pairing");
    const cplx acc = (state_symbol.values.array() * op_symbol.values.array()).sum();
    return std::real(acc) * state_symbol.grid.cell_area();
}

Eigen::MatrixXcd position_operator(const PhaseSpaceGrid& grid) {
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(grid.n_x, grid.n_x);
    for (int i = 0; i < grid.n_x; ++i) X(i, i) = grid.x(i);
    return X;
}

Eigen::MatrixXcd momentum_operator(const PhaseSpaceGrid& grid) {
    PhaseSpaceFunction p = PhaseSpaceFunction::sample(
        grid, [](double, double pv) { return cplx(pv, 0.0); });
    return weyl_quantize(p);
}

Eigen::VectorXd hermite_vector(const PhaseSpaceGrid& grid, int n, double mass, double omega) {
    if (n < 0) throw ContractError("hermite_vector: n must be >= 0");
    const int nx = grid.n_x;
    const double dx = grid.dx();
    const double s = std::sqrt(mass * omega / grid.hbar);
    Eigen::VectorXd prev2(nx), prev1(nx), cur(nx);
    const double norm0 = std::pow(mass * omega / (M_PI * grid.hbar), 0.25) * std::sqrt(dx);
    for (int i = 0; i < nx; ++i) {
        const double xi = s * grid.x(i);
        prev1(i) = norm0 * std::exp(-0.5 * xi * xi);
    }
    if (n == 0) return prev1;
    prev2.setZero();
    for (int k = 1; k <= n; ++k) {
        for (int i = 0; i < nx; ++i) {
            const double xi = s * grid.x(i);
            cur(i) = std::sqrt(2.0 / k) * xi * prev1(i) -
                     std::sqrt(static_cast<double>(k - 1) / k) * prev2(i);
        }
        prev2.swap(prev1);
        prev1.swap(cur);
    }
    return prev1;
}

Eigen::VectorXcd coherent_vector(const PhaseSpaceGrid& grid, cplx alpha, double mass,
                                 double omega, int cutoff) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(grid.n_x);
    cplx c = std::exp(-0.5 * std::norm(alpha));
    for (int n = 0; n < cutoff; ++n) {
        psi += c * hermite_vector(grid, n, mass, omega).cast<cplx>();
        c *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
    return psi;
}

Eigen::MatrixXcd fock_band_projector(const PhaseSpaceGrid& grid, int n_lo, int n_hi,
                                     double mass, double omega) {
    if (n_lo < 0 || n_hi < n_lo)
        throw ContractError("fock_band_projector: need 0 <= n_lo <= n_hi");
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(grid.n_x, grid.n_x);
    for (int n = n_lo; n <= n_hi; ++n) {
        const Eigen::VectorXd psi = hermite_vector(grid, n, mass, omega);
        P.noalias() += psi * psi.transpose();
    }
    return P.cast<cplx>();
}

Eigen::MatrixXcd fock_to_position(const Eigen::MatrixXcd& fock_matrix,
                                  const PhaseSpaceGrid& grid, double mass, double omega) {
    const int nf = static_cast<int>(fock_matrix.rows());
    Eigen::MatrixXd basis(grid.n_x, nf);
    for (int n = 0; n < nf; ++n) basis.col(n) = hermite_vector(grid, n, mass, omega);
    return basis.cast<cplx>() * fock_matrix * basis.transpose().cast<cplx>();
}

ReducedSymbolReport reduced_symbol_check(const Eigen::MatrixXcd& O_S,
                                         const PhaseSpaceGrid& sys_grid,
                                         const PhaseSpaceGrid& env_grid, double tol) {
    const int ns = sys_grid.n_x, ne = env_grid.n_x;
    if (O_S.rows() != ns || O_S.cols() != ns)
        throw GridError("reduced_symbol_check: O_S does not match sys_grid");
    if (static_cast<long>(ns) * ne > 64 * 64)
        throw GridError("reduced_symbol_check: bipartite grid too large");
    const int Ns = 2 * ns, Ne = 2 * ne;
    const auto& w = midpoint_weights();

    // dense two-particle operator on the product grid
    auto full_env_integrated = [&](const Eigen::MatrixXcd& op_full) {
        Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(ns, Ns);
        Eigen::MatrixXcd ker(Ns, Ne);
        auto entry = [&](int as, int ae, int bs, int be) -> cplx {
            if (as < 0 || as >= ns || bs < 0 || bs >= ns) return 0.0;
            if (ae < 0 || ae >= ne || be < 0 || be >= ne) return 0.0;
            return op_full(as * ne + ae, bs * ne + be);
        };
        // kernel value at (center_s offset cs half-steps, sep rs) x (env same)
        auto kernel2d = [&](int is, int ie, int rs, int re) -> cplx {
            const bool odd_s = rs & 1, odd_e = re & 1;
            const int ms = odd_s ? (rs - 1) / 2 : rs / 2;
            const int me = odd_e ? (re - 1) / 2 : re / 2;
            if (!odd_s && !odd_e)
                return entry(is + ms, ie + me, is - ms, ie - me);
            cplx acc = 0.0;
            if (odd_s && !odd_e) {
                for (int k = 0; k < kInterpW; ++k) {
                    const int o = k - kInterpW / 2;
                    acc += w[k] * entry(is + o + ms + 1, ie + me, is + o - ms, ie - me);
                }
                return acc;
            }
            if (!odd_s && odd_e) {
                for (int k = 0; k < kInterpW; ++k) {
                    const int o = k - kInterpW / 2;
                    acc += w[k] * entry(is + ms, ie + o + me + 1, is - ms, ie + o - me);
                }
                return acc;
            }
            for (int k = 0; k < kInterpW; ++k)
                for (int l = 0; l < kInterpW; ++l) {
                    const int o = k - kInterpW / 2, q = l - kInterpW / 2;
                    acc += w[k] * w[l] *
                           entry(is + o + ms + 1, ie + q + me + 1, is + o - ms,
                                 ie + q - me);
                }
            return acc;
        };
        Eigen::VectorXcd line_e(Ne), line_s(Ns);
        for (int is = 0; is < ns; ++is) {
            for (int ie = 0; ie < ne; ++ie) {
                ker.setZero();
                for (int rs = -ns + 1; rs < ns; ++rs)
                    for (int re = -ne + 1; re < ne; ++re)
                        ker(wrap(rs, Ns), wrap(re, Ne)) = kernel2d(is, ie, rs, re);
                // transform env separations, then integrate over env momentum:
                // sum_j of the DFT is N_e * (r_e = 0 row), so the env momentum
                // integral only needs the re = 0 kernel column transformed in s.
                // Keep the honest full transform in the s direction.
                for (int rr = 0; rr < Ns; ++rr) {
                    line_e = ker.row(rr).transpose();
                    fft(line_e, false);
                    // integral over p_env: sum of symbol columns * dpi
                    cplx pe_int = 0.0;
                    for (int je = 0; je < Ne; ++je) pe_int += line_e(je);
                    ker(rr, 0) = pe_int; // reuse column 0 as accumulator
                }
                for (int rr = 0; rr < Ns; ++rr) line_s(rr) = ker(rr, 0);
                fft(line_s, false);
                for (int js = 0; js < Ns; ++js)
                    G(is, js) += line_s(wrap(js - ns, Ns)) * env_grid.dp();
            }
            // chi integration weight
        }
        return (G * env_grid.dx()).eval();
    };

    const Eigen::MatrixXcd I_full =
        Eigen::MatrixXcd::Identity(ns * ne, ns * ne);
    Eigen::MatrixXcd O_full = Eigen::MatrixXcd::Zero(ns * ne, ns * ne);
    for (int as = 0; as < ns; ++as)
        for (int bs = 0; bs < ns; ++bs)
            for (int ae = 0; ae < ne; ++ae)
                O_full(as * ne + ae, bs * ne + ae) = O_S(as, bs);

    ReducedSymbolReport rep;
    const Eigen::MatrixXcd G_cal = full_env_integrated(I_full);
    rep.normalization = G_cal.real().mean();
    const Eigen::MatrixXcd G = full_env_integrated(O_full) / rep.normalization;
    const PhaseSpaceFunction ref = wigner_transform(O_S, sys_grid);
    const double scale = std::max(1.0, ref.values.cwiseAbs().maxCoeff());
    rep.max_abs_error = (G - ref.values).cwiseAbs().maxCoeff() / scale;
    rep.pass = rep.max_abs_error < tol;
    return rep;
}

} // namespace qcl
