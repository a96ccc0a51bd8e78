#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sse/types.hpp"

namespace sse {

struct LtiSystem {
    Mat A;      // n x n
    Mat B;      // n x d
    Mat C;      // m x n, row i = C_i
    Mat Q;      // n x n process noise covariance (PSD)
    Mat R;      // m x m measurement noise covariance (PD)
    Mat Sigma;  // n x n initial-state covariance (PSD)
    int n = 0, m = 0, d = 0;
};

LtiSystem make_system(Mat A, Mat B, Mat C, Mat Q, Mat R, Mat Sigma);

struct StatePartition {
    int n_u = 0;
    int n_s = 0;
    Mat A1;  // unstable block
    Mat A2;  // stable block
};

enum class AttackType { None, Uniform, ConstantBias, Custom };

struct AttackScenario {
    std::vector<int> compromised_set;  // 1-based sensor indices
    AttackType type = AttackType::None;
    double magnitude = 0.0;  // uniform generator: a_i(k) ~ U(-magnitude, magnitude)
    Vec bias;                // constant-bias generator, one entry per compromised sensor
    Mat custom;              // custom generator: N x m, used verbatim
    std::uint64_t seed = 0;
};

struct Trajectory {
    int N = 0;
    Mat x;  // (N+1) x n, row k = x(k)
    Mat u;  // N x d, row k = u(k)
    Mat w;  // N x n, row k = w(k)
    Mat v;  // N x m, row k-1 = v(k), k = 1..N
    Mat a;  // N x m, row k-1 = a(k)
    Mat y;  // N x m, row k-1 = y(k) = z(k) + a(k)
    Mat z;  // N x m, row k-1 = z(k) = C x(k) + v(k)
};

struct Controller {
    bool feedback = false;
    Mat K_lqr;  // d x n, u(k) = -K_lqr x(k)
    Mat u_seq;  // open loop: N x d; empty => u = 0
};

// Validates invariants (PSD/PD covariances, A invertible, (A,C) observable),
// classifies eigenvalues against 1 - stability_tol and verifies the
// unstable-first block ordering plus geometric multiplicity 1 of every
// unstable eigenvalue.
StatePartition validate_system(const LtiSystem& sys, const ToleranceConfig& tols = {});

Mat gen_sparse_attack(const AttackScenario& scenario, int m, int n_steps);

Trajectory simulate(const LtiSystem& sys, const Controller& controller,
                    const AttackScenario& attack, const Vec& x0, int n_steps,
                    std::uint64_t seed, bool zero_noise = false,
                    bool random_x0 = false);

// Largest residual of the replay identities x(k+1) = Ax + Bu + w and
// y = Cx + v + a over the stored trajectory.
double replay_residual(const LtiSystem& sys, const Trajectory& traj);

// Similarity transform for a diagonalizable A: returns (T, T A T^-1) with
// eigenvalues ordered by descending modulus. Complex pairs must be absent
// (real modal form is the caller's responsibility otherwise).
std::pair<Mat, Mat> modal_transform(const Mat& A, const ToleranceConfig& tols = {});

struct UndetectablePair {
    Trajectory system1;
    Trajectory system2;
    CVec xi;
    Complex lambda;
};

// Theorem-5 construction: two trajectories with identical outputs and a
// state gap growing like |lambda|^k. Requires the certificate
// C_{J \ A} xi = 0 for an unstable eigenvector xi.
UndetectablePair build_undetectable_attack(const LtiSystem& sys,
                                           const std::vector<int>& attack_set,
                                           const CVec& xi, Complex lambda,
                                           int n_steps, std::uint64_t seed,
                                           bool with_noise = true,
                                           const ToleranceConfig& tols = {});

}  // namespace sse
