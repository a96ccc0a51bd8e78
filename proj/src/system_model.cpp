#include "sse/system_model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "sse/rng.hpp"

namespace sse {

namespace {

void check_symmetric(const Mat& M, const char* name) {
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + M.cwiseAbs().maxCoeff()))
        fail("NotSymmetric", std::string(name) + " is not symmetric");
}

double min_sym_eig(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
    return es.eigenvalues().minCoeff();
}

// deterministic PSD square root factor: M = L L'
Mat psd_factor(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
    Vec d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

Mat stacked_observability(const Mat& A, const Mat& C) {
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(C.rows());
    Mat O(n * m, n);
    Mat Ak = Mat::Identity(n, n);
    for (int k = 0; k < n; ++k) {
        O.middleRows(k * m, m) = C * Ak;
        Ak = Ak * A;
    }
    return O;
}

int mat_rank(const Mat& M, double rel_tol) {
    Eigen::JacobiSVD<Mat> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

int cmat_rank(const CMat& M, double rel_tol) {
    Eigen::JacobiSVD<CMat> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

}  // namespace

LtiSystem make_system(Mat A, Mat B, Mat C, Mat Q, Mat R, Mat Sigma) {
    LtiSystem sys;
    sys.n = static_cast<int>(A.rows());
    sys.m = static_cast<int>(C.rows());
    sys.d = static_cast<int>(B.cols());
    if (A.cols() != sys.n || B.rows() != sys.n || C.cols() != sys.n ||
        Q.rows() != sys.n || Q.cols() != sys.n || R.rows() != sys.m ||
        R.cols() != sys.m || Sigma.rows() != sys.n || Sigma.cols() != sys.n)
        fail("DimensionMismatch", "inconsistent system matrix dimensions");
    sys.A = std::move(A);
    sys.B = std::move(B);
    sys.C = std::move(C);
    sys.Q = std::move(Q);
    sys.R = std::move(R);
    sys.Sigma = std::move(Sigma);
    return sys;
}

StatePartition validate_system(const LtiSystem& sys, const ToleranceConfig& tols) {
    check_symmetric(sys.Q, "Q");
    check_symmetric(sys.R, "R");
    check_symmetric(sys.Sigma, "Sigma");
    if (min_sym_eig(sys.Q) < -1e-10 * (1.0 + sys.Q.cwiseAbs().maxCoeff()))
        fail("NotPsd", "Q is not positive semidefinite");
    if (min_sym_eig(sys.Sigma) < -1e-10 * (1.0 + sys.Sigma.cwiseAbs().maxCoeff()))
        fail("NotPsd", "Sigma is not positive semidefinite");
    if (min_sym_eig(sys.R) <= tols.rank_tol * (1.0 + sys.R.cwiseAbs().maxCoeff()))
        fail("NotPd", "R is not positive definite");

    Eigen::FullPivLU<Mat> lu(sys.A);
    lu.setThreshold(tols.rank_tol);
    if (lu.rank() < sys.n) fail("SingularA", "A is singular");

    if (mat_rank(stacked_observability(sys.A, sys.C), tols.rank_tol) < sys.n)
        fail("NotObservable", "(A, C) is not observable");

    Eigen::EigenSolver<Mat> es(sys.A);
    CVec lam = es.eigenvalues();
    int n_u = 0;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (std::abs(lam(i)) >= 1.0 - tols.stability_tol) ++n_u;
    const int n_s = sys.n - n_u;

    StatePartition part;
    part.n_u = n_u;
    part.n_s = n_s;
    part.A1 = sys.A.topLeftCorner(n_u, n_u);
    part.A2 = sys.A.bottomRightCorner(n_s, n_s);

    const double a_scale = 1.0 + sys.A.cwiseAbs().maxCoeff();
    if (n_u > 0 && n_s > 0) {
        if (sys.A.topRightCorner(n_u, n_s).cwiseAbs().maxCoeff() > 1e-10 * a_scale ||
            sys.A.bottomLeftCorner(n_s, n_u).cwiseAbs().maxCoeff() > 1e-10 * a_scale)
            fail("NotBlockOrdered", "A is not in [A1 0; 0 A2] block form");
    }
    if (n_u > 0) {
        Eigen::EigenSolver<Mat> e1(part.A1);
        for (Eigen::Index i = 0; i < e1.eigenvalues().size(); ++i)
            if (std::abs(e1.eigenvalues()(i)) < 1.0 - tols.stability_tol)
                fail("NotBlockOrdered", "stable eigenvalue found in the leading block");
    }
    if (n_s > 0) {
        Eigen::EigenSolver<Mat> e2(part.A2);
        for (Eigen::Index i = 0; i < e2.eigenvalues().size(); ++i)
            if (std::abs(e2.eigenvalues()(i)) >= 1.0 - tols.stability_tol)
                fail("NotBlockOrdered", "unstable eigenvalue found in the trailing block");
    }

    // geometric multiplicity 1 for each distinct unstable eigenvalue
    std::vector<Complex> unstable;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (std::abs(lam(i)) < 1.0 - tols.stability_tol) continue;
        bool seen = false;
        for (const Complex& u : unstable)
            if (std::abs(u - lam(i)) <= 1e-7 * (1.0 + std::abs(u))) seen = true;
        if (!seen) unstable.push_back(lam(i));
    }
    for (const Complex& lv : unstable) {
        CMat shifted = sys.A.cast<Complex>() - lv * CMat::Identity(sys.n, sys.n);
        if (cmat_rank(shifted, tols.rank_tol) != sys.n - 1)
            fail("DerogatoryUnstable",
                 "unstable eigenvalue has geometric multiplicity > 1");
    }
    return part;
}

Mat gen_sparse_attack(const AttackScenario& scenario, int m, int n_steps) {
    if (n_steps < 1) fail("EmptyHorizon", "attack horizon must be >= 1");
    for (int i : scenario.compromised_set)
        if (i < 1 || i > m) fail("DimensionMismatch", "attacked sensor index out of range");
    Mat a = Mat::Zero(n_steps, m);
    std::vector<int> idx = scenario.compromised_set;
    std::sort(idx.begin(), idx.end());
    switch (scenario.type) {
        case AttackType::None:
            break;
        case AttackType::Uniform: {
            GaussianRng rng(scenario.seed);
            for (int k = 0; k < n_steps; ++k)
                for (int i : idx) a(k, i - 1) = rng.uniform_sym(scenario.magnitude);
            break;
        }
        case AttackType::ConstantBias: {
            if (scenario.bias.size() != static_cast<Eigen::Index>(idx.size()))
                fail("DimensionMismatch", "bias length must match compromised set size");
            for (int k = 0; k < n_steps; ++k)
                for (size_t j = 0; j < idx.size(); ++j) a(k, idx[j] - 1) = scenario.bias(j);
            break;
        }
        case AttackType::Custom: {
            if (scenario.custom.rows() < n_steps || scenario.custom.cols() != m)
                fail("DimensionMismatch", "custom attack sequence has wrong shape");
            a = scenario.custom.topRows(n_steps);
            for (int k = 0; k < n_steps; ++k)
                for (int i = 0; i < m; ++i)
                    if (a(k, i) != 0.0 &&
                        std::find(idx.begin(), idx.end(), i + 1) == idx.end())
                        fail("DimensionMismatch", "custom attack outside compromised set");
            break;
        }
    }
    return a;
}

Trajectory simulate(const LtiSystem& sys, const Controller& controller,
                    const AttackScenario& attack, const Vec& x0, int n_steps,
                    std::uint64_t seed, bool zero_noise, bool random_x0) {
    if (n_steps < 1) fail("EmptyHorizon", "n_steps must be >= 1");
    if (controller.feedback && controller.K_lqr.cols() != sys.n)
        fail("DimensionMismatch", "feedback gain has wrong column count");
    if (!controller.feedback && controller.u_seq.size() > 0 &&
        (controller.u_seq.cols() != sys.d || controller.u_seq.rows() < n_steps))
        fail("DimensionMismatch", "open-loop input sequence has wrong shape");

    Trajectory tr;
    tr.N = n_steps;
    tr.x = Mat::Zero(n_steps + 1, sys.n);
    tr.u = Mat::Zero(n_steps, sys.d);
    tr.w = Mat::Zero(n_steps, sys.n);
    tr.v = Mat::Zero(n_steps, sys.m);
    tr.z = Mat::Zero(n_steps, sys.m);
    tr.y = Mat::Zero(n_steps, sys.m);

    GaussianRng rng(seed);
    AttackScenario atk = attack;
    atk.seed = attack_stream_seed(seed ^ attack.seed);
    tr.a = gen_sparse_attack(atk, sys.m, n_steps);

    Mat Lq = psd_factor(sys.Q);
    Mat Lr = psd_factor(sys.R);
    Mat Ls = psd_factor(sys.Sigma);

    Vec x = x0.size() ? x0 : Vec::Zero(sys.n);
    if (random_x0 && !zero_noise) x = Ls * rng.gauss_vec(sys.n);
    tr.x.row(0) = x.transpose();

    for (int k = 0; k < n_steps; ++k) {
        Vec u;
        if (controller.feedback)
            u = -(controller.K_lqr * x);
        else if (controller.u_seq.size() > 0)
            u = controller.u_seq.row(k).transpose();
        else
            u = Vec::Zero(sys.d);
        tr.u.row(k) = u.transpose();

        Vec w = zero_noise ? Vec::Zero(sys.n) : Vec(Lq * rng.gauss_vec(sys.n));
        Vec v = zero_noise ? Vec::Zero(sys.m) : Vec(Lr * rng.gauss_vec(sys.m));
        x = sys.A * x + sys.B * u + w;
        Vec z = sys.C * x + v;
        tr.w.row(k) = w.transpose();
        tr.v.row(k) = v.transpose();
        tr.x.row(k + 1) = x.transpose();
        tr.z.row(k) = z.transpose();
        tr.y.row(k) = (z + tr.a.row(k).transpose()).transpose();
    }
    return tr;
}

double replay_residual(const LtiSystem& sys, const Trajectory& traj) {
    double res = 0.0;
    for (int k = 0; k < traj.N; ++k) {
        Vec lhs = traj.x.row(k + 1).transpose() - sys.A * traj.x.row(k).transpose() -
                  sys.B * traj.u.row(k).transpose() - traj.w.row(k).transpose();
        res = std::max(res, max_abs(lhs));
        Vec out = traj.y.row(k).transpose() - sys.C * traj.x.row(k + 1).transpose() -
                  traj.v.row(k).transpose() - traj.a.row(k).transpose();
        res = std::max(res, max_abs(out));
    }
    return res;
}

std::pair<Mat, Mat> modal_transform(const Mat& A, const ToleranceConfig& tols) {
    Eigen::EigenSolver<Mat> es(A);
    CVec lam = es.eigenvalues();
    CMat V = es.eigenvectors();
    const int n = static_cast<int>(A.rows());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(lam(a)) > std::abs(lam(b));
    });
    CMat Vs(n, n);
    for (int j = 0; j < n; ++j) Vs.col(j) = V.col(order[j]);
    if (Vs.imag().cwiseAbs().maxCoeff() > 1e-8 * (1.0 + Vs.real().cwiseAbs().maxCoeff()))
        fail("ComplexModes", "A has complex eigenvectors; real modal form unavailable");
    Mat Vr = Vs.real();
    for (int j = 0; j < n; ++j) {
        Eigen::Index lead = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(Vr(i, j)) > 1e-10 * Vr.col(j).norm()) { lead = i; break; }
        if (Vr(lead, j) < 0) Vr.col(j) = -Vr.col(j);
        Vr.col(j).normalize();
    }
    Eigen::FullPivLU<Mat> lu(Vr);
    lu.setThreshold(tols.rank_tol);
    if (lu.rank() < n) fail("SingularTransform", "eigenvector matrix is singular");
    Mat T = lu.inverse();
    return {T, T * A * Vr};
}

UndetectablePair build_undetectable_attack(const LtiSystem& sys,
                                           const std::vector<int>& attack_set,
                                           const CVec& xi, Complex lambda,
                                           int n_steps, std::uint64_t seed,
                                           bool with_noise, const ToleranceConfig& tols) {
    if (n_steps < 1) fail("EmptyHorizon", "n_steps must be >= 1");
    if (std::abs(lambda) < 1.0 - tols.stability_tol)
        fail("NotUnstable", "lambda must satisfy |lambda| >= 1");
    if (attack_set.size() % 2 != 0)
        fail("CertificateInvalid", "attack set must have even size 2p");
    // eigenvector certificate
    CVec resid = sys.A.cast<Complex>() * xi - lambda * xi;
    if (max_abs(resid) > 1e-8 * (1.0 + max_abs(xi)))
        fail("CertificateInvalid", "xi is not an eigenvector of A for lambda");
    std::vector<int> sorted_set = attack_set;
    std::sort(sorted_set.begin(), sorted_set.end());
    for (int i = 1; i <= sys.m; ++i) {
        if (std::binary_search(sorted_set.begin(), sorted_set.end(), i)) continue;
        Complex ci_xi = (sys.C.row(i - 1).cast<Complex>() * xi).value();
        if (std::abs(ci_xi) > 1e-8 * (1.0 + max_abs(xi)))
            fail("CertificateInvalid", "C_i xi != 0 for an honest sensor");
    }
    const size_t p = sorted_set.size() / 2;
    std::vector<int> a1(sorted_set.begin(), sorted_set.begin() + p);
    std::vector<int> a2(sorted_set.begin() + p, sorted_set.end());

    const bool complex_xi = xi.imag().cwiseAbs().maxCoeff() >
                            1e-10 * (1.0 + xi.real().cwiseAbs().maxCoeff());
    Vec basis = complex_xi ? Vec(2.0 * xi.real()) : Vec(xi.real());

    GaussianRng rng(seed);
    UndetectablePair out;
    out.xi = xi;
    out.lambda = lambda;
    Trajectory& t1 = out.system1;
    Trajectory& t2 = out.system2;
    for (Trajectory* t : {&t1, &t2}) {
        t->N = n_steps;
        t->x = Mat::Zero(n_steps + 1, sys.n);
        t->u = Mat::Zero(n_steps, sys.d);
        t->w = Mat::Zero(n_steps, sys.n);
        t->v = Mat::Zero(n_steps, sys.m);
        t->a = Mat::Zero(n_steps, sys.m);
        t->y = Mat::Zero(n_steps, sys.m);
        t->z = Mat::Zero(n_steps, sys.m);
    }
    Vec x2 = basis;
    t2.x.row(0) = x2.transpose();
    for (int k = 0; k < n_steps; ++k) {
        double phi = with_noise ? rng.gauss() : 0.0;
        Vec w2 = phi * basis;
        x2 = sys.A * x2 + w2;
        t2.w.row(k) = w2.transpose();
        t2.x.row(k + 1) = x2.transpose();
        Vec cx = sys.C * x2;
        t2.z.row(k) = cx.transpose();
        for (int i : a1) {
            t1.a(k, i - 1) = cx(i - 1);
            t1.y(k, i - 1) = cx(i - 1);
            t2.y(k, i - 1) = cx(i - 1);
        }
        for (int i : a2) t2.a(k, i - 1) = -cx(i - 1);
        // honest sensors: both outputs stay zero (certificate); attacked set 2
        // already cancelled to zero in t2.y
    }
    return out;
}

}  // namespace sse
