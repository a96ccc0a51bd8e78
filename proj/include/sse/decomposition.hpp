#pragma once

#include <vector>

#include "sse/kalman.hpp"
#include "sse/system_model.hpp"
#include "sse/types.hpp"

namespace sse {

struct SpectralData {
    CMat V;   // eigenvectors of A - KCA, unit norm, leading entry zero-phase
    CVec pi;  // eigenvalues, sorted by descending modulus (ties: descending angle)
};

struct LocalBank {
    std::vector<CMat> G;  // per sensor, n x n: row j = C_i A (A - pi_j I)^-1
    CMat G_stack;         // mn x n
    CMat F;               // n x mn, [F_1 ... F_m] with F_i = V diag(V^-1 K_i)
    CMat Q_tilde;         // mn x mn
    CMat W_tilde;         // mn x mn, solves W = Pi~ W Pi~* + Q~
};

// Eigendecomposition of the closed loop with the deterministic ordering and
// phase convention, so everything downstream is reproducible.
SpectralData decompose(const KalmanSteady& ks, const ToleranceConfig& tols = {});

LocalBank build_bank(const LtiSystem& sys, const KalmanSteady& ks,
                     const SpectralData& spec, const ToleranceConfig& tols = {});

// Local estimator recursion, Eq. (7):
//   zeta_i(k+1) = Pi zeta_i(k) + 1_n y_i(k+1) + (G_i - 1_n C_i) B u(k).
void bank_step(const LocalBank& bank, const LtiSystem& sys, const SpectralData& spec,
               std::vector<CVec>& zeta, const Vec& u_prev, const Vec& y_next);

// Verifies G_i = D1 D2 D3 O_i A (characteristic-polynomial factorization).
// Returns the max relative residual over sensors; throws StructureMismatch
// above 1e-8.
double check_G_structure(const LtiSystem& sys, const SpectralData& spec,
                         const LocalBank& bank);

// monic characteristic polynomial coefficients a_0..a_n of A (a_n = 1)
Vec char_poly(const Mat& A);

}  // namespace sse
