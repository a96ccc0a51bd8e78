#include "sse/kalman.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace sse {

KalmanSteady solve_steady_kalman(const LtiSystem& sys, const ToleranceConfig& tols) {
    const int n = sys.n;
    Mat P_plus = sys.Sigma;
    long it = 0;
    for (;; ++it) {
        if (it >= tols.riccati_max_iter)
            fail("NoConvergence", "Riccati fixed-point iteration did not converge");
        Mat S = sys.C * P_plus * sys.C.transpose() + sys.R;
        Mat K = P_plus * sys.C.transpose() * S.inverse();
        Mat P = P_plus - K * sys.C * P_plus;
        Mat next = sys.A * P * sys.A.transpose() + sys.Q;
        double err = (next - P_plus).cwiseAbs().maxCoeff();
        P_plus = next;
        if (err <= tols.riccati_tol * (1.0 + inf_norm(P_plus))) break;
    }
    KalmanSteady ks;
    ks.iterations = it + 1;
    ks.P_plus = P_plus;
    Mat S = sys.C * P_plus * sys.C.transpose() + sys.R;
    ks.K = P_plus * sys.C.transpose() * S.inverse();
    ks.P = P_plus - ks.K * sys.C * P_plus;
    ks.closed_loop = sys.A - ks.K * sys.C * sys.A;

    Eigen::EigenSolver<Mat> es(ks.closed_loop);
    CVec pi = es.eigenvalues();
    double max_mod = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) max_mod = std::max(max_mod, std::abs(pi(i)));
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(pi(i)) >= 1.0 - tols.stability_tol)
            fail("UnstableClosedLoop", "A - KCA is not Schur stable");
    const double gap = tols.eig_gap_rel * std::max(1.0, max_mod);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (std::abs(pi(i) - pi(j)) <= gap)
                fail("RepeatedClosedLoopEig",
                     "A - KCA has (numerically) repeated eigenvalues");
    Eigen::EigenSolver<Mat> ea(sys.A);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::abs(pi(i) - ea.eigenvalues()(j)) <= gap)
                fail("SharedEigenvalue", "A - KCA shares an eigenvalue with A");
    return ks;
}

Vec filter_step(const KalmanSteady& ks, const LtiSystem& sys, const Vec& x_hat,
                const Vec& u_prev, const Vec& y_next) {
    Vec pred = sys.A * x_hat + sys.B * u_prev;
    return pred + ks.K * (y_next - sys.C * pred);
}

}  // namespace sse
