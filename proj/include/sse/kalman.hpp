#pragma once

#include "sse/system_model.hpp"
#include "sse/types.hpp"

namespace sse {

struct KalmanSteady {
    Mat P;            // steady filtered error covariance
    Mat P_plus;       // steady prediction covariance, P+ = A P A' + Q
    Mat K;            // steady gain
    Mat closed_loop;  // A - K C A
    long iterations = 0;
};

// Fixed-point Riccati iteration from P(0|-1) = Sigma. Verifies Assumption 1:
// A - KCA has n distinct eigenvalues, none shared with A.
KalmanSteady solve_steady_kalman(const LtiSystem& sys, const ToleranceConfig& tols = {});

// One step of the fixed-gain filter, Eq. (4):
//   x^(k+1) = (I - KC)(A x^(k) + B u(k)) + K y(k+1).
// Feeding z(k+1) instead of y(k+1) yields the oracle estimate.
Vec filter_step(const KalmanSteady& ks, const LtiSystem& sys, const Vec& x_hat,
                const Vec& u_prev, const Vec& y_next);

}  // namespace sse
