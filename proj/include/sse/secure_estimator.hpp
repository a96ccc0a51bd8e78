#pragma once

#include <utility>
#include <vector>

#include "sse/canonical.hpp"
#include "sse/decomposition.hpp"
#include "sse/types.hpp"

namespace sse {

struct SolverConfig {
    double gamma = 10.0;
    double rho = 1.0;  // initial ADMM penalty; adapted during the run
    double abs_tol = 1e-8;
    double rel_tol = 1e-6;
    int max_iter = 50000;
};

struct SecureSolve {
    Vec x_tilde;
    CVec mu;
    CVec nu;
    CVec lambda;  // dual of the coupling constraint, from the mu-stationarity equation
    double objective = 0.0;
    // residual norms of the four KKT equations (lambda anchored by KKT1)
    double kkt1 = 0.0, kkt2 = 0.0, kkt3 = 0.0, kkt4 = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Problem (13) solver. Complex data is handled by a real/imaginary embedding
// with size-2 group soft-thresholding, so ||nu||_1 is the sum of complex
// moduli and conjugate symmetry (hence a real x_tilde) is preserved.
// The quadratic factorization is cached; per-step solves warm-start from the
// previous solution.
class SecureSolver {
public:
    explicit SecureSolver(const CanonicalData& canon);

    SecureSolve solve(const CVec& Y, const SolverConfig& cfg);
    void reset_warm_start();

private:
    const CanonicalData* canon_;
    int n_ = 0, mn_ = 0, mns_ = 0;
    Mat S_;     // embedding of [-H -I ; NH 0] acting on [x; Re nu; Im nu]
    Mat Wemb_;  // real embedding of script-W
    Mat Qm_;    // S' Wemb S
    Mat q_rhs_; // S' Wemb (embedding basis for Y), maps [ReY; ImY] -> q0
    double rho_cached_ = -1.0;
    Eigen::LLT<Mat> llt_;
    Vec z_, u_;
    void refactor(double rho);
};

// Problem (11): closed form via the normal equations of the equivalent
// M~^-1-weighted least squares. Returns (x_ls, phi) with phi = Y - H x_ls.
std::pair<Vec, CVec> solve_least_squares(const CanonicalData& canon, const CVec& Y);

// Baseline of Problems (9)-(10): weight W~^-1, regressor G, data = stacked
// local estimates. Shares the ADMM machinery.
class LiuSolver {
public:
    explicit LiuSolver(const LocalBank& bank);
    SecureSolve solve(const CVec& zeta_stack, const SolverConfig& cfg);

private:
    int n_ = 0, mn_ = 0;
    Mat S_, Wemb_, Qm_, q_rhs_;
    CMat G_;
    CMat Winv_;
    double rho_cached_ = -1.0;
    Eigen::LLT<Mat> llt_;
    Vec z_, u_;
    void refactor(double rho);
};

struct RecoveryCheck {
    bool holds = false;
    double lhs = 0.0;
};

// Condition (14): || scriptW [ P~ (I - GF) eps ; N H x_hat ] ||_inf <= gamma.
RecoveryCheck check_recovery_condition(const CanonicalData& canon, const LocalBank& bank,
                                       const CVec& eps, const Vec& x_hat, double gamma);

struct BoundReport {
    double gamma_o = 0.0;
    double norm_F_inf = 0.0;
    Vec rhs;        // per-state right side of Eq. (15)
    Vec diff;       // per-state |x_tilde_j - x_hat_o_j|
    int violations = 0;
};

// Theorem-4 error bound for one step, given the oracle (attack-free) bank
// states, oracle Kalman estimate and oracle eps.
BoundReport evaluate_bound(const CanonicalData& canon, const LocalBank& bank,
                           const CoverageData& cov, const Vec& x_tilde,
                           const std::vector<CVec>& zeta_o, const Vec& x_hat_o,
                           const CVec& eps_o, double gamma);

}  // namespace sse
