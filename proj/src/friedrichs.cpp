#include "qcl/friedrichs.hpp"

#include <cmath>

#include "qcl/errors.hpp"

namespace qcl {

void FriedrichsConfig::validate() const {
    if (bath_grid.size() != couplings.size())
        throw ConfigError("FriedrichsConfig: bath_grid and couplings lengths differ");
    for (size_t k = 1; k < bath_grid.size(); ++k)
        if (!(bath_grid[k] > bath_grid[k - 1]))
            throw ConfigError("FriedrichsConfig: bath_grid must be strictly increasing");
    if (!(hbar > 0.0)) throw ConfigError("FriedrichsConfig: hbar must be positive");
    if (!(mass > 0.0)) throw ConfigError("FriedrichsConfig: mass must be positive");
    if (fock_cutoff < 1) throw ConfigError("FriedrichsConfig: fock_cutoff must be >= 1");
}

FriedrichsConfig FriedrichsConfig::from_band(double omega, const SpectralDensity& band,
                                             int n_modes, double hbar, double mass,
                                             int fock_cutoff) {
    if (n_modes < 1) throw ConfigError("from_band: need at least one bath mode");
    band.validate();
    FriedrichsConfig cfg;
    cfg.omega = omega;
    cfg.hbar = hbar;
    cfg.mass = mass;
    cfg.fock_cutoff = fock_cutoff;
    const double dw = (band.w_max - band.w_min) / n_modes;
    cfg.bath_grid.resize(n_modes);
    cfg.couplings.resize(n_modes);
    for (int k = 0; k < n_modes; ++k) {
        const double wk = band.w_min + (k + 0.5) * dw;
        cfg.bath_grid[k] = wk;
        cfg.couplings[k] = std::sqrt(band.J(wk) * dw);
    }
    cfg.validate();
    return cfg;
}

double FriedrichsConfig::recurrence_time() const {
    if (bath_grid.size() < 2) return std::numeric_limits<double>::infinity();
    double dw = std::numeric_limits<double>::infinity();
    for (size_t k = 1; k < bath_grid.size(); ++k)
        dw = std::min(dw, bath_grid[k] - bath_grid[k - 1]);
    return 2.0 * M_PI / dw;
}

Eigen::MatrixXd one_excitation_hamiltonian(const FriedrichsConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(cfg.bath_grid.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 1, n + 1);
    H(0, 0) = cfg.hbar * cfg.omega;
    for (int k = 0; k < n; ++k) {
        H(k + 1, k + 1) = cfg.hbar * cfg.bath_grid[k];
        H(0, k + 1) = H(k + 1, 0) = cfg.hbar * cfg.couplings[k];
    }
    return H;
}

cplx survival_amplitude(const Eigen::MatrixXd& H, double hbar, double t) {
    if (t < 0.0) throw ContractError("survival_amplitude: t must be >= 0");
    const double herm = (H - H.transpose()).cwiseAbs().maxCoeff();
    if (herm > 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw ContractError("survival_amplitude: H is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::VectorXd& d = es.eigenvalues();
    const Eigen::VectorXd w0 = es.eigenvectors().row(0);
    cplx acc = 0.0;
    for (int j = 0; j < d.size(); ++j)
        acc += w0(j) * w0(j) * std::exp(cplx(0.0, -d(j) * t / hbar));
    return acc;
}

FriedrichsEvolver::FriedrichsEvolver(const FriedrichsConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Eigen::MatrixXd H = one_excitation_hamiltonian(cfg_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H / cfg_.hbar);
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
}

Eigen::VectorXcd FriedrichsEvolver::propagator_column(double t) const {
    Eigen::VectorXcd phases(eigenvalues_.size());
    for (int j = 0; j < eigenvalues_.size(); ++j)
        phases(j) = std::exp(cplx(0.0, -eigenvalues_(j) * t));
    // u = V diag(phases) V^T e_0
    return eigenvectors_ * (phases.cwiseProduct(eigenvectors_.row(0).transpose().cast<cplx>()));
}

cplx FriedrichsEvolver::survival_amplitude(double t) const {
    cplx acc = 0.0;
    for (int j = 0; j < eigenvalues_.size(); ++j) {
        const double w = eigenvectors_(0, j);
        acc += w * w * std::exp(cplx(0.0, -eigenvalues_(j) * t));
    }
    return acc;
}

double FriedrichsEvolver::bath_weight(double t) const {
    return std::max(0.0, 1.0 - survival_probability(t));
}

Eigen::MatrixXcd reduced_density(const Eigen::VectorXcd& psi, int sys_dim, int env_dim) {
    if (psi.size() != static_cast<Eigen::Index>(sys_dim) * env_dim)
        throw ContractError("reduced_density: state length does not match sys_dim * env_dim");
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(sys_dim, sys_dim);
    for (int i = 0; i < sys_dim; ++i)
        for (int j = 0; j < sys_dim; ++j) {
            cplx acc = 0.0;
            for (int k = 0; k < env_dim; ++k)
                acc += psi(i * env_dim + k) * std::conj(psi(j * env_dim + k));
            rho(i, j) = acc;
        }
    return rho;
}

Eigen::MatrixXcd reduced_density_matrix(const Eigen::MatrixXcd& rho, int sys_dim, int env_dim) {
    if (rho.rows() != rho.cols() ||
        rho.rows() != static_cast<Eigen::Index>(sys_dim) * env_dim)
        throw ContractError("reduced_density_matrix: dimension mismatch");
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(sys_dim, sys_dim);
    for (int i = 0; i < sys_dim; ++i)
        for (int j = 0; j < sys_dim; ++j) {
            cplx acc = 0.0;
            for (int k = 0; k < env_dim; ++k)
                acc += rho(i * env_dim + k, j * env_dim + k);
            out(i, j) = acc;
        }
    return out;
}

double coherent_alpha_scale(double mass, double omega0p, double hbar, CoherentScaling s) {
    switch (s) {
        case CoherentScaling::omnes:
            return std::sqrt(mass * omega0p / hbar);
        case CoherentScaling::textbook:
            return std::sqrt(mass * omega0p / (2.0 * hbar));
        case CoherentScaling::halfsquare_over_hbar:
            return std::sqrt(mass * omega0p / 2.0) / hbar;
    }
    return 0.0;
}

Eigen::VectorXcd coherent_state_fock(cplx alpha, int cutoff, double deficit_tol) {
    if (cutoff < 1) throw ContractError("coherent_state_fock: cutoff must be >= 1");
    Eigen::VectorXcd v(cutoff);
    // c_n = e^{-|a|^2/2} a^n / sqrt(n!) via the ratio recurrence.
    cplx c = std::exp(-0.5 * std::norm(alpha));
    double norm2 = 0.0;
    for (int n = 0; n < cutoff; ++n) {
        v(n) = c;
        norm2 += std::norm(c);
        c *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
    const double deficit = 1.0 - norm2;
    if (deficit > deficit_tol)
        throw TruncationError("coherent_state_fock: truncated norm deficit " +
                              std::to_string(deficit), deficit);
    return v;
}

Eigen::VectorXcd coherent_pair_state(const CoherentPairInit& init, const FriedrichsConfig& cfg,
                                     double omega0p) {
    const double scale = coherent_alpha_scale(cfg.mass, omega0p, cfg.hbar, init.scaling);
    const cplx alpha1 = scale * init.x1;
    const cplx alpha2 = scale * init.x2;
    const Eigen::VectorXcd v1 = coherent_state_fock(alpha1, cfg.fock_cutoff);
    const Eigen::VectorXcd v2 = coherent_state_fock(alpha2, cfg.fock_cutoff);
    Eigen::VectorXcd psi = init.a * v1 + init.b * v2;
    const double n = psi.norm();
    if (n <= 0.0) throw ContractError("coherent_pair_state: zero-norm superposition");
    return psi / n;
}

CoherentPairDynamics::CoherentPairDynamics(const FriedrichsEvolver& evolver,
                                           const CoherentPairInit& init, double omega0p)
    : evolver_(evolver), cutoff_(evolver.config().fock_cutoff) {
    const FriedrichsConfig& cfg = evolver.config();
    const double scale = coherent_alpha_scale(cfg.mass, omega0p, cfg.hbar, init.scaling);
    alpha1_ = scale * init.x1;
    alpha2_ = scale * init.x2;
    const cplx ovl = std::exp(-0.5 * std::norm(alpha1_) - 0.5 * std::norm(alpha2_) +
                              std::conj(alpha1_) * alpha2_);
    // normalize |a a1> + |b a2>
    const double n2 = std::norm(init.a) + std::norm(init.b) +
                      2.0 * std::real(init.a * std::conj(init.b) * ovl);
    if (!(n2 > 0.0)) throw ContractError("CoherentPairDynamics: zero-norm superposition");
    a_ = init.a / std::sqrt(n2);
    b_ = init.b / std::sqrt(n2);
    const cplx o12 = std::exp(-0.5 * std::norm(alpha1_) - 0.5 * std::norm(alpha2_) +
                              std::conj(alpha2_) * alpha1_); // <a2|a1>
    anchor_ = std::sqrt(std::max(0.0, 2.0 + 2.0 * std::real(o12 * o12)));
    // cutoff adequacy probed once at the largest amplitude
    coherent_state_fock(std::abs(alpha1_) > std::abs(alpha2_) ? alpha1_ : alpha2_, cutoff_);
}

namespace {

// exp(s (conj(a_j) a_i - (|a_i|^2 + |a_j|^2)/2)): bath-branch overlap factor.
cplx kappa(double s, cplx ai, cplx aj) {
    return std::exp(s * (std::conj(aj) * ai - 0.5 * (std::norm(ai) + std::norm(aj))));
}

} // namespace

Eigen::MatrixXcd CoherentPairDynamics::reduced_state(double t) const {
    const cplx A = evolver_.survival_amplitude(t);
    const double s = std::max(0.0, 1.0 - std::norm(A));
    const cplx b1 = alpha1_ * A, b2 = alpha2_ * A;
    const Eigen::VectorXcd v1 = coherent_state_fock(b1, cutoff_);
    const Eigen::VectorXcd v2 = coherent_state_fock(b2, cutoff_);
    Eigen::MatrixXcd rho =
        std::norm(a_) * (v1 * v1.adjoint()) + std::norm(b_) * (v2 * v2.adjoint());
    const cplx cross = a_ * std::conj(b_) * kappa(s, alpha1_, alpha2_);
    rho += cross * (v1 * v2.adjoint());
    rho += std::conj(cross) * (v2 * v1.adjoint());
    return rho;
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> CoherentPairDynamics::pair_states(double t) const {
    const cplx A = evolver_.survival_amplitude(t);
    return {coherent_state_fock(alpha1_ * A, cutoff_), coherent_state_fock(alpha2_ * A, cutoff_)};
}

double CoherentPairDynamics::coherence_envelope(double t) const {
    const double s = std::max(0.0, 1.0 - evolver_.survival_probability(t));
    return std::abs(a_ * std::conj(b_) * kappa(s, alpha1_, alpha2_)) * anchor_;
}

std::vector<double> offdiagonal_envelope(
    const std::vector<Eigen::MatrixXcd>& rho_series,
    const std::vector<std::pair<Eigen::VectorXcd, Eigen::VectorXcd>>& pair_series) {
    if (rho_series.empty()) throw ContractError("offdiagonal_envelope: empty series");
    if (rho_series.size() != pair_series.size())
        throw ContractError("offdiagonal_envelope: series length mismatch");

    // anchor from the t = 0 pair
    const Eigen::VectorXcd& u0 = pair_series.front().first;
    const Eigen::VectorXcd& w0 = pair_series.front().second;
    const cplx o12 = w0.dot(u0); // <a2|a1>
    const double anchor = std::sqrt(std::max(0.0, 2.0 + 2.0 * std::real(o12 * o12)));

    std::vector<double> env;
    env.reserve(rho_series.size());
    for (size_t k = 0; k < rho_series.size(); ++k) {
        const Eigen::VectorXcd& v1 = pair_series[k].first;
        const Eigen::VectorXcd& v2 = pair_series[k].second;
        // Degenerate pair: no cross structure to extract, Eq.-level coherence
        // between identical branches never decays at this order.
        if ((v1 - v2).norm() < 1e-12) {
            const cplx r = v1.dot(rho_series[k] * v1);
            env.push_back(0.5 * std::abs(r) * anchor); // coincident branches: no cross decay
            continue;
        }
        // Coefficients in the (non-orthogonal) pair frame via the Gram dual:
        // rho ~ sum_ij w_ij |v_i><v_j|, W = G^{-1} (V^+ rho V) G^{-1}.
        Eigen::MatrixXcd V(v1.size(), 2);
        V.col(0) = v1;
        V.col(1) = v2;
        const Eigen::Matrix2cd G = (V.adjoint() * V).eval();
        const Eigen::Matrix2cd Gi = G.inverse();
        const Eigen::Matrix2cd W = Gi * (V.adjoint() * rho_series[k] * V) * Gi;
        env.push_back(std::abs(W(0, 1)) * anchor);
    }
    return env;
}

Eigen::Matrix2cd one_excitation_reduced(const FriedrichsEvolver& evolver,
                                        cplx c0, cplx c1, double t) {
    const cplx A = evolver.survival_amplitude(t);
    const double n2 = std::norm(c0) + std::norm(c1);
    if (!(n2 > 0.0)) throw ContractError("one_excitation_reduced: zero state");
    c0 /= std::sqrt(n2);
    c1 /= std::sqrt(n2);
    const double w = std::norm(c1 * A);
    const cplx coh = c1 * A * std::conj(c0);
    Eigen::Matrix2cd rho;
    rho << 1.0 - w, std::conj(coh),
           coh,     w;
    return rho;
}

} // namespace qcl
