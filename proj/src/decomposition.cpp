#include "sse/decomposition.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace sse {

namespace {

double cond2(const CMat& M) {
    Eigen::JacobiSVD<CMat> svd(M);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

}  // namespace

SpectralData decompose(const KalmanSteady& ks, const ToleranceConfig& tols) {
    const int n = static_cast<int>(ks.closed_loop.rows());
    Eigen::EigenSolver<Mat> es(ks.closed_loop);
    CVec lam = es.eigenvalues();
    CMat V0 = es.eigenvectors();

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(lam(i)));
    const double tie = 1e-12 * std::max(1.0, scale);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double ma = std::abs(lam(a)), mb = std::abs(lam(b));
        if (std::abs(ma - mb) > tie) return ma > mb;
        return std::arg(lam(a)) > std::arg(lam(b));
    });

    SpectralData sd;
    sd.pi = CVec(n);
    sd.V = CMat(n, n);
    for (int j = 0; j < n; ++j) {
        sd.pi(j) = lam(order[j]);
        CVec v = V0.col(order[j]);
        v.normalize();
        // zero-phase leading significant entry
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(v(i)) > 1e-8) {
                v *= std::conj(v(i)) / std::abs(v(i));
                break;
            }
        }
        sd.V.col(j) = v;
    }
    if (cond2(sd.V) > tols.cond_v_max)
        fail("IllConditionedV", "closed-loop eigenvector matrix is ill conditioned");
    CMat recon = sd.V * sd.pi.asDiagonal() * sd.V.inverse();
    double rel = max_abs(CMat(recon - ks.closed_loop.cast<Complex>())) /
                 (1.0 + max_abs(ks.closed_loop));
    if (rel > tols.recon_tol)
        fail("ReconstructionFailed", "eigendecomposition reconstruction residual too large");
    return sd;
}

LocalBank build_bank(const LtiSystem& sys, const KalmanSteady& ks,
                     const SpectralData& spec, const ToleranceConfig& tols) {
    const int n = sys.n, m = sys.m;
    LocalBank bank;
    bank.G.resize(m);
    bank.G_stack = CMat(m * n, n);
    bank.F = CMat::Zero(n, m * n);
    CMat Vinv = spec.V.inverse();

    // rows of G_i: C_i A (A - pi_j I)^-1, via one factorization per pi_j
    std::vector<CMat> shift_inv_t(n);  // (A - pi_j I)^-T as a solver input
    CMat Acx = sys.A.cast<Complex>();
    for (int j = 0; j < n; ++j) {
        CMat shifted = Acx - spec.pi(j) * CMat::Identity(n, n);
        Eigen::FullPivLU<CMat> lu(shifted);
        lu.setThreshold(tols.rank_tol);
        if (lu.rank() < n)
            fail("SingularShift", "A - pi_j I is singular (pi_j is an eigenvalue of A)");
        shift_inv_t[j] = lu.inverse();
    }
    for (int i = 0; i < m; ++i) {
        CMat Gi(n, n);
        CMat cia = (sys.C.row(i) * sys.A).cast<Complex>();  // 1 x n
        for (int j = 0; j < n; ++j) Gi.row(j) = cia * shift_inv_t[j];
        bank.G[i] = Gi;
        bank.G_stack.middleRows(i * n, n) = Gi;
        CVec ki = Vinv * ks.K.col(i).cast<Complex>();
        bank.F.middleCols(i * n, n) = spec.V * ki.asDiagonal();
    }

    // Q~ = S Q S* + R (x) 1_{n x n}, S rows: G_i - 1_n C_i
    CMat Smat(m * n, n);
    CMat ones = CMat::Ones(n, 1);
    for (int i = 0; i < m; ++i)
        Smat.middleRows(i * n, n) = bank.G[i] - ones * sys.C.row(i).cast<Complex>();
    bank.Q_tilde = Smat * sys.Q.cast<Complex>() * Smat.adjoint();
    for (int i1 = 0; i1 < m; ++i1)
        for (int i2 = 0; i2 < m; ++i2)
            bank.Q_tilde.block(i1 * n, i2 * n, n, n).array() += Complex(sys.R(i1, i2), 0.0);

    bank.W_tilde = CMat(m * n, m * n);
    for (int a = 0; a < m * n; ++a)
        for (int b = 0; b < m * n; ++b) {
            Complex denom = 1.0 - spec.pi(a % n) * std::conj(spec.pi(b % n));
            bank.W_tilde(a, b) = bank.Q_tilde(a, b) / denom;
        }
    return bank;
}

void bank_step(const LocalBank& bank, const LtiSystem& sys, const SpectralData& spec,
               std::vector<CVec>& zeta, const Vec& u_prev, const Vec& y_next) {
    const int n = sys.n;
    CVec bu = (sys.B * u_prev).cast<Complex>();
    for (int i = 0; i < sys.m; ++i) {
        CVec drive = bank.G[i] * bu;
        Complex ci_bu = (sys.C.row(i) * sys.B * u_prev).value();
        for (int j = 0; j < n; ++j)
            zeta[i](j) = spec.pi(j) * zeta[i](j) + y_next(i) + drive(j) - ci_bu;
    }
}

Vec char_poly(const Mat& A) {
    const int n = static_cast<int>(A.rows());
    Eigen::EigenSolver<Mat> es(A);
    CVec lam = es.eigenvalues();
    // expand prod (x - lambda_i); coeffs[k] multiplies x^k
    std::vector<Complex> c(n + 1, Complex(0.0));
    c[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        for (int k = i + 1; k >= 1; --k) c[k] = c[k - 1] - lam(i) * c[k];
        c[0] = -lam(i) * c[0];
    }
    Vec a(n + 1);
    for (int k = 0; k <= n; ++k) a(k) = c[k].real();
    a(n) = 1.0;
    return a;
}

double check_G_structure(const LtiSystem& sys, const SpectralData& spec,
                         const LocalBank& bank) {
    const int n = sys.n;
    Vec a = char_poly(sys.A);
    // p(pi_j) by Horner on a_n..a_0
    CVec p_pi(n);
    for (int j = 0; j < n; ++j) {
        Complex acc = a(n);
        for (int k = n - 1; k >= 0; --k) acc = acc * spec.pi(j) + a(k);
        p_pi(j) = acc;
    }
    CMat D1 = CMat::Zero(n, n);
    CMat D2(n, n);
    for (int j = 0; j < n; ++j) {
        D1(j, j) = -1.0 / p_pi(j);
        for (int k = 0; k < n; ++k) D2(j, k) = std::pow(spec.pi(j), double(n - 1 - k));
    }
    Mat D3 = Mat::Zero(n, n);  // lower-triangular Toeplitz of a_n .. a_1
    for (int r = 0; r < n; ++r)
        for (int cidx = 0; cidx <= r; ++cidx) D3(r, cidx) = a(n - (r - cidx));

    double worst = 0.0;
    for (int i = 0; i < sys.m; ++i) {
        Mat Oi(n, n);
        Mat Ak = Mat::Identity(n, n);
        for (int k = 0; k < n; ++k) {
            Oi.row(k) = sys.C.row(i) * Ak;
            Ak = Ak * sys.A;
        }
        CMat Gi_ref = D1 * D2 * D3.cast<Complex>() * (Oi * sys.A).cast<Complex>();
        double rel = max_abs(CMat(Gi_ref - bank.G[i])) / (1.0 + max_abs(bank.G[i]));
        worst = std::max(worst, rel);
    }
    if (worst > 1e-8)
        fail("StructureMismatch", "G_i does not match the polynomial factorization");
    return worst;
}

}  // namespace sse
