#include "sse/secure_estimator.hpp"

#include <cmath>
#include <functional>

namespace sse {

namespace {

struct AdmmResult {
    Vec v;
    int iterations = 0;
    bool converged = false;
};

// Consensus ADMM for min 1/2 (Sv - b)' W (Sv - b) + gamma * sum_g |nu_g| where
// the penalized complex entries are the trailing 2*mn components of v paired
// as (n + g, n + mn + g). q0 = -S' W b is the linear gradient term. z/u
// persist across calls for warm starting.
AdmmResult run_admm(const Vec& q0, int mn, double gamma, const SolverConfig& cfg,
                    double& rho_cached, Eigen::LLT<Mat>& llt, Vec& z, Vec& u,
                    const std::function<void(double)>& refactor) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        fail("InvalidGamma", "gamma must be finite and nonnegative");
    double rho = rho_cached > 0 ? rho_cached : cfg.rho;
    if (rho != rho_cached) {
        refactor(rho);
        rho_cached = rho;
    }
    if (z.size() != 2 * mn) {
        z = Vec::Zero(2 * mn);
        u = Vec::Zero(2 * mn);
    }
    AdmmResult res;
    Vec v;
    const double sqn = std::sqrt(static_cast<double>(2 * mn));
    for (int it = 0; it < cfg.max_iter; ++it) {
        Vec rhs = -q0;
        rhs.tail(2 * mn) += rho * (z - u);
        v = llt.solve(rhs);
        Vec nu = v.tail(2 * mn);
        Vec zold = z;
        const double thr = gamma / rho;
        for (int g = 0; g < mn; ++g) {
            double t1 = nu(g) + u(g);
            double t2 = nu(mn + g) + u(mn + g);
            double nt = std::hypot(t1, t2);
            double s = (nt > thr) ? (1.0 - thr / nt) : 0.0;
            z(g) = s * t1;
            z(mn + g) = s * t2;
        }
        u += nu - z;
        double rpri = (nu - z).norm();
        double rdua = rho * (z - zold).norm();
        double eps_pri = sqn * cfg.abs_tol + cfg.rel_tol * std::max(nu.norm(), z.norm());
        double eps_dua = sqn * cfg.abs_tol + cfg.rel_tol * rho * u.norm();
        res.iterations = it + 1;
        if (rpri <= eps_pri && rdua <= eps_dua) {
            res.converged = true;
            break;
        }
        if ((it + 1) % 25 == 0) {
            if (rpri > 10.0 * rdua && rho < 1e6) {
                rho *= 2.0;
                u *= 0.5;
                refactor(rho);
                rho_cached = rho;
            } else if (rdua > 10.0 * rpri && rho > 1e-6) {
                rho *= 0.5;
                u *= 2.0;
                refactor(rho);
                rho_cached = rho;
            }
        }
    }
    res.v = v;
    return res;
}

CVec unembed(const Vec& z, int mn) {
    CVec c(mn);
    for (int g = 0; g < mn; ++g) c(g) = Complex(z(g), z(mn + g));
    return c;
}

}  // namespace

SecureSolver::SecureSolver(const CanonicalData& canon) : canon_(&canon) {
    n_ = static_cast<int>(canon.H.cols());
    mn_ = static_cast<int>(canon.H.rows());
    mns_ = static_cast<int>(canon.N.rows());
    CMat NH = canon.N.cast<Complex>() * canon.H;

    // residual r = Sv - b = -[mu; N H x], v = [x; Re nu; Im nu], b = [Y; 0]
    // (global sign of r is irrelevant to the quadratic form). Row layout:
    // [Re(mn + mns); Im(mn + mns)] to match the W embedding below.
    const int rows = 2 * (mn_ + mns_);
    S_ = Mat::Zero(rows, n_ + 2 * mn_);
    S_.block(0, 0, mn_, n_) = canon.H.real();
    S_.block(mn_, 0, mns_, n_) = -NH.real();
    S_.block(mn_ + mns_, 0, mn_, n_) = canon.H.imag();
    S_.block(mn_ + mns_ + mn_, 0, mns_, n_) = -NH.imag();
    S_.block(0, n_, mn_, mn_) = Mat::Identity(mn_, mn_);
    S_.block(mn_ + mns_, n_ + mn_, mn_, mn_) = Mat::Identity(mn_, mn_);

    const int wr = mn_ + mns_;
    Wemb_ = Mat(2 * wr, 2 * wr);
    Wemb_.topLeftCorner(wr, wr) = canon.Wsc.real();
    Wemb_.topRightCorner(wr, wr) = -canon.Wsc.imag();
    Wemb_.bottomLeftCorner(wr, wr) = canon.Wsc.imag();
    Wemb_.bottomRightCorner(wr, wr) = canon.Wsc.real();

    Qm_ = S_.transpose() * Wemb_ * S_;
    Mat Bsel = Mat::Zero(rows, 2 * mn_);
    Bsel.block(0, 0, mn_, mn_) = Mat::Identity(mn_, mn_);
    Bsel.block(mn_ + mns_, mn_, mn_, mn_) = Mat::Identity(mn_, mn_);
    q_rhs_ = -S_.transpose() * Wemb_ * Bsel;  // q0 = q_rhs_ [Re Y; Im Y]
}

void SecureSolver::refactor(double rho) {
    Mat Qr = Qm_;
    Qr.bottomRightCorner(2 * mn_, 2 * mn_) += rho * Mat::Identity(2 * mn_, 2 * mn_);
    llt_.compute(Qr);
    if (llt_.info() != Eigen::Success)
        fail("FactorizationFailed", "ADMM quadratic block is not positive definite");
}

void SecureSolver::reset_warm_start() {
    z_.resize(0);
    u_.resize(0);
    rho_cached_ = -1.0;
}

SecureSolve SecureSolver::solve(const CVec& Y, const SolverConfig& cfg) {
    if (Y.size() != mn_) fail("DimensionMismatch", "Y has wrong length");
    Vec yemb(2 * mn_);
    yemb.head(mn_) = Y.real();
    yemb.tail(mn_) = Y.imag();
    Vec q0 = q_rhs_ * yemb;
    auto rf = [this](double rho) { refactor(rho); };
    AdmmResult ar = run_admm(q0, mn_, cfg.gamma, cfg, rho_cached_, llt_, z_, u_, rf);

    SecureSolve out;
    out.iterations = ar.iterations;
    out.converged = ar.converged;
    out.x_tilde = ar.v.head(n_);
    out.nu = unembed(z_, mn_);
    CVec Hx = canon_->H * out.x_tilde.cast<Complex>();
    out.mu = Y - Hx - out.nu;

    CMat Ncx = canon_->N.cast<Complex>();
    out.lambda = canon_->M_tilde_inv * out.mu +
                 Ncx.transpose() * (Ncx * (out.mu + Hx));
    out.kkt1 = 0.0;  // lambda is defined by the mu-stationarity equation
    out.kkt2 = max_abs(CVec(canon_->H.adjoint() * (canon_->M_tilde_inv * out.mu)));
    double k3 = 0.0;
    const double nu_scale = 1e-9 * (1.0 + max_abs(out.nu));
    for (int e = 0; e < mn_; ++e) {
        double anu = std::abs(out.nu(e));
        if (anu > nu_scale)
            k3 = std::max(k3, std::abs(out.lambda(e) - cfg.gamma * out.nu(e) / anu));
        else
            k3 = std::max(k3, std::max(0.0, std::abs(out.lambda(e)) - cfg.gamma));
    }
    out.kkt3 = k3;
    out.kkt4 = max_abs(CVec(Y - Hx - out.mu - out.nu));

    CVec c(mn_ + mns_);
    c.head(mn_) = out.mu;
    c.tail(mns_) = Ncx * Hx;
    out.objective = 0.5 * (c.adjoint() * canon_->Wsc * c).value().real() +
                    cfg.gamma * out.nu.cwiseAbs().sum();
    return out;
}

std::pair<Vec, CVec> solve_least_squares(const CanonicalData& canon, const CVec& Y) {
    CMat A = canon.H.adjoint() * canon.M_tilde_inv * canon.H;
    CVec b = canon.H.adjoint() * (canon.M_tilde_inv * Y);
    Mat Ar = A.real();
    Eigen::FullPivLU<Mat> lu(Ar);
    lu.setThreshold(1e-12);
    if (lu.rank() < Ar.rows())
        fail("SingularNormalEquations", "least-squares normal equations are singular");
    Vec x = lu.solve(b.real());
    CVec phi = Y - canon.H * x.cast<Complex>();
    return {x, phi};
}

LiuSolver::LiuSolver(const LocalBank& bank) {
    G_ = bank.G_stack;
    n_ = static_cast<int>(G_.cols());
    mn_ = static_cast<int>(G_.rows());
    Eigen::FullPivLU<CMat> lu(bank.W_tilde);
    lu.setThreshold(1e-14);
    if (lu.rank() < mn_) fail("SingularMtilde", "W~ is singular");
    Winv_ = lu.inverse();
    Winv_ = 0.5 * (Winv_ + Winv_.adjoint().eval());

    // residual r = Sv - b = -[mu], b = zeta stack
    S_ = Mat::Zero(2 * mn_, n_ + 2 * mn_);
    S_.block(0, 0, mn_, n_) = G_.real();
    S_.block(mn_, 0, mn_, n_) = G_.imag();
    S_.block(0, n_, mn_, mn_) = Mat::Identity(mn_, mn_);
    S_.block(mn_, n_ + mn_, mn_, mn_) = Mat::Identity(mn_, mn_);
    Wemb_ = Mat(2 * mn_, 2 * mn_);
    Wemb_.topLeftCorner(mn_, mn_) = Winv_.real();
    Wemb_.topRightCorner(mn_, mn_) = -Winv_.imag();
    Wemb_.bottomLeftCorner(mn_, mn_) = Winv_.imag();
    Wemb_.bottomRightCorner(mn_, mn_) = Winv_.real();
    Qm_ = S_.transpose() * Wemb_ * S_;
    q_rhs_ = -S_.transpose() * Wemb_;  // b embeds directly as [Re zeta; Im zeta]
}

void LiuSolver::refactor(double rho) {
    Mat Qr = Qm_;
    Qr.bottomRightCorner(2 * mn_, 2 * mn_) += rho * Mat::Identity(2 * mn_, 2 * mn_);
    llt_.compute(Qr);
    if (llt_.info() != Eigen::Success)
        fail("FactorizationFailed", "ADMM quadratic block is not positive definite");
}

SecureSolve LiuSolver::solve(const CVec& zeta_stack, const SolverConfig& cfg) {
    if (zeta_stack.size() != mn_) fail("DimensionMismatch", "zeta stack has wrong length");
    Vec yemb(2 * mn_);
    yemb.head(mn_) = zeta_stack.real();
    yemb.tail(mn_) = zeta_stack.imag();
    Vec q0 = q_rhs_ * yemb;
    auto rf = [this](double rho) { refactor(rho); };
    AdmmResult ar = run_admm(q0, mn_, cfg.gamma, cfg, rho_cached_, llt_, z_, u_, rf);

    SecureSolve out;
    out.iterations = ar.iterations;
    out.converged = ar.converged;
    out.x_tilde = ar.v.head(n_);
    out.nu = unembed(z_, mn_);
    out.mu = zeta_stack - G_ * out.x_tilde.cast<Complex>() - out.nu;
    out.lambda = Winv_ * out.mu;
    out.kkt2 = max_abs(CVec(G_.adjoint() * out.lambda));
    out.objective = 0.5 * (out.mu.adjoint() * Winv_ * out.mu).value().real() +
                    cfg.gamma * out.nu.cwiseAbs().sum();
    return out;
}

RecoveryCheck check_recovery_condition(const CanonicalData& canon, const LocalBank& bank,
                                       const CVec& eps, const Vec& x_hat, double gamma) {
    const int mn = static_cast<int>(canon.H.rows());
    const int mns = static_cast<int>(canon.N.rows());
    CVec resid = eps - bank.G_stack * (bank.F * eps);  // (I - GF) eps
    CVec c(mn + mns);
    c.head(mn) = canon.P_tilde * resid;
    c.tail(mns) = canon.N.cast<Complex>() * (canon.H * x_hat.cast<Complex>());
    RecoveryCheck out;
    out.lhs = max_abs(CVec(canon.Wsc * c));
    out.holds = out.lhs <= gamma;
    return out;
}

BoundReport evaluate_bound(const CanonicalData& canon, const LocalBank& bank,
                           const CoverageData& cov, const Vec& x_tilde,
                           const std::vector<CVec>& zeta_o, const Vec& x_hat_o,
                           const CVec& eps_o, double gamma) {
    const int n = static_cast<int>(canon.H.cols());
    const int n_u = canon.n_u;
    BoundReport rep;
    rep.norm_F_inf = canon.norm_F_inf;
    RecoveryCheck oracle = check_recovery_condition(canon, bank, eps_o, x_hat_o, gamma);
    rep.gamma_o = oracle.lhs;
    rep.rhs = Vec(n);
    rep.diff = Vec(n);

    std::vector<CVec> Pz(canon.P.size());
    for (size_t i = 0; i < canon.P.size(); ++i) Pz[i] = canon.P[i] * zeta_o[i];

    for (int j = 0; j < n; ++j) {
        rep.diff(j) = std::abs(x_tilde(j) - x_hat_o(j));
        if (j < n_u) {
            double spread = 0.0;
            std::vector<int> Ej(cov.E[j].begin(), cov.E[j].end());
            for (size_t a = 0; a < Ej.size(); ++a)
                for (size_t b = a + 1; b < Ej.size(); ++b)
                    spread = std::max(spread,
                                      std::abs(Pz[Ej[a] - 1](j) - Pz[Ej[b] - 1](j)));
            rep.rhs(j) = spread + (gamma + rep.gamma_o) * canon.norm_F_inf;
        } else {
            rep.rhs(j) = gamma * canon.norm_F_inf + std::abs(x_hat_o(j));
        }
        if (rep.diff(j) > rep.rhs(j) * (1.0 + 1e-9) + 1e-9) ++rep.violations;
    }
    return rep;
}

}  // namespace sse
