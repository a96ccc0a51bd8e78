#include "sse/canonical.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace sse {

namespace {

// Moore-Penrose pseudoinverse (unique, hence reproducible across libraries)
CMat pinv(const CMat& M, double rcond) {
    Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    double cut = (s.size() ? s(0) : 0.0) * rcond;
    CVec sinv = CVec::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cut) sinv(i) = 1.0 / s(i);
    return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().adjoint();
}

double cond2(const CMat& M) {
    Eigen::JacobiSVD<CMat> svd(M);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

}  // namespace

CoverageData coverage(const LtiSystem& sys, const ToleranceConfig& tols) {
    CoverageData cov;
    cov.O.resize(sys.m);
    cov.E.assign(sys.n, {});
    for (int i = 0; i < sys.m; ++i) {
        Mat Oi(sys.n, sys.n);
        Mat Ak = Mat::Identity(sys.n, sys.n);
        for (int k = 0; k < sys.n; ++k) {
            Oi.row(k) = sys.C.row(i) * Ak;
            Ak = Ak * sys.A;
        }
        cov.O[i] = Oi;
        double scale = Oi.norm();
        for (int j = 0; j < sys.n; ++j)
            if (Oi.col(j).norm() > tols.col_tol * scale) cov.E[j].insert(i + 1);
    }
    return cov;
}

std::pair<int, int> hc_counts(const CoverageData& cov, const std::vector<int>& attack_set,
                              int j) {
    int honest = 0, compromised = 0;
    for (int i : cov.E[j - 1]) {
        if (std::find(attack_set.begin(), attack_set.end(), i) != attack_set.end())
            ++compromised;
        else
            ++honest;
    }
    return {honest, compromised};
}

SparseIndices sparse_indices(const CoverageData& cov, const StatePartition& part, int m) {
    SparseIndices out;
    int min_all = m + 1, min_u = m + 1;
    const int n = static_cast<int>(cov.E.size());
    for (int j = 0; j < n; ++j) {
        int sz = static_cast<int>(cov.E[j].size());
        min_all = std::min(min_all, sz);
        if (j < part.n_u) min_u = std::min(min_u, sz);
    }
    out.obs_index = min_all - 1;
    out.det_index = (part.n_u == 0) ? m - 1 : min_u - 1;
    out.tolerable_p = out.det_index / 2;
    return out;
}

CanonicalData build_canonical(const LtiSystem& sys, const StatePartition& part,
                              const LocalBank& bank, const CoverageData& cov,
                              const ToleranceConfig& tols) {
    const int n = sys.n, m = sys.m;
    const int n_u = part.n_u, n_s = part.n_s;
    CanonicalData cd;
    cd.n_u = n_u;
    cd.n_s = n_s;
    cd.P.resize(m);
    cd.P_tilde = CMat::Zero(m * n, m * n);
    cd.H = CMat(m * n, n);

    for (int i = 0; i < m; ++i) {
        // W_i block for the whitening scale of free rows
        CMat Wi = bank.W_tilde.block(i * n, i * n, n, n);
        CMat Gu = bank.G[i].leftCols(n_u);  // n x n_u
        CMat Mq = Gu.transpose();           // rows r with r Gu = e_j': Mq r' = e_j
        CMat Mq_pinv = pinv(Mq, 1e-12);     // n x n_u

        int expected_rank = 0;
        for (int j = 0; j < n_u; ++j)
            if (cov.E[j].count(i + 1)) ++expected_rank;
        Eigen::JacobiSVD<CMat> svd(Mq);
        int rk = 0;
        for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
            if (svd.singularValues()(k) > tols.rank_tol * svd.singularValues()(0)) ++rk;
        if (rk != expected_rank)
            fail("RankDeficient", "rank of G_i^U does not match the coverage pattern");

        CMat Pi = CMat::Zero(n, n);
        // pinned rows go at their state index: [P_i G_i]_{j, 1..n_u} = e_j'
        // for every covered unstable j (min-norm solutions of r G_i^U = e_j')
        std::vector<int> free_slots;
        for (int j = 0; j < n_u; ++j) {
            if (cov.E[j].count(i + 1))
                Pi.row(j) = (Mq_pinv * CVec::Unit(n_u, j)).transpose();
            else
                free_slots.push_back(j);
        }
        for (int j = n_u; j < n; ++j) free_slots.push_back(j);
        // free rows: projected Gram-Schmidt basis of the null space of Mq,
        // scaled to null_row_scale std under W_i
        CMat Pn = CMat::Identity(n, n) - Mq_pinv * Mq;
        std::vector<CVec> basis;
        for (int e = 0; e < n && static_cast<int>(basis.size()) < n - rk; ++e) {
            CVec r = Pn.col(e);
            for (const CVec& b : basis) r -= (b.adjoint() * r).value() * b;
            if (r.norm() > 1e-8) basis.push_back(r.normalized());
        }
        if (static_cast<int>(basis.size()) != static_cast<int>(free_slots.size()))
            fail("RankDeficient", "could not build a null-space basis for G_i^U");
        for (size_t bidx = 0; bidx < basis.size(); ++bidx) {
            const CVec& b = basis[bidx];
            Complex var = (b.transpose() * Wi * b.conjugate()).value();
            double sd = std::sqrt(std::max(var.real(), 0.0));
            if (!(sd > 0.0)) fail("RankDeficient", "degenerate free-row variance");
            Pi.row(free_slots[bidx]) = (tols.null_row_scale / sd) * b.transpose();
        }
        if (cond2(Pi) > tols.cond_p_max)
            fail("IllConditionedP", "canonical transform P_i is ill conditioned");
        cd.P[i] = Pi;
        cd.P_tilde.block(i * n, i * n, n, n) = Pi;
        cd.H.middleRows(i * n, n) = Pi * bank.G[i];
    }

    // N selects the stable part of each canonical block; L = [0 I_ns]
    cd.N = Mat::Zero(m * n_s, m * n);
    for (int i = 0; i < m; ++i)
        cd.N.block(i * n_s, i * n + n_u, n_s, n_s) = Mat::Identity(n_s, n_s);
    cd.L = Mat::Zero(n_s, n);
    cd.L.rightCols(n_s) = Mat::Identity(n_s, n_s);

    cd.M_tilde = cd.P_tilde * bank.W_tilde * cd.P_tilde.adjoint();
    Eigen::FullPivLU<CMat> lu(cd.M_tilde);
    lu.setThreshold(tols.rank_tol);
    if (lu.rank() < m * n) fail("SingularMtilde", "M~ is singular");
    cd.M_tilde_inv = lu.inverse();

    const int mn = m * n, mns = m * n_s;
    CMat Ncx = cd.N.cast<Complex>();
    cd.Wsc = CMat::Zero(mn + mns, mn + mns);
    cd.Wsc.topLeftCorner(mn, mn) = cd.M_tilde_inv + Ncx.transpose() * Ncx;
    cd.Wsc.topRightCorner(mn, mns) = Ncx.transpose();
    cd.Wsc.bottomLeftCorner(mns, mn) = Ncx;
    cd.Wsc.bottomRightCorner(mns, mns) = CMat::Identity(mns, mns);

    // script F: [mu; x~_s] = F lambda at a KKT point (Theorem 4)
    CMat Lcx = cd.L.cast<Complex>();
    CMat LHN = Lcx * cd.H.adjoint() * Ncx.transpose();  // n_s x mns
    CMat NHL = Ncx * cd.H * Lcx.transpose();            // mns x n_s
    CMat D1 = CMat::Zero(mn + n_s, mn + mns);
    D1.topLeftCorner(mn, mn) = CMat::Identity(mn, mn);
    D1.bottomRightCorner(n_s, mns) = LHN;
    CMat D2 = CMat::Zero(mn + mns, mn + n_s);
    D2.topLeftCorner(mn, mn) = CMat::Identity(mn, mn);
    D2.bottomRightCorner(mns, n_s) = NHL;
    CMat D3 = CMat::Zero(mn + n_s, mn);
    D3.topRows(mn) = CMat::Identity(mn, mn);
    D3.bottomRows(n_s) = Lcx * cd.H.adjoint();
    CMat core = D1 * cd.Wsc * D2;
    Eigen::FullPivLU<CMat> lu2(core);
    lu2.setThreshold(tols.rank_tol);
    if (lu2.rank() < core.rows()) fail("SingularMtilde", "Theorem-4 core matrix is singular");
    cd.Fcal = lu2.solve(D3);
    cd.norm_F_inf = inf_norm(cd.Fcal);
    return cd;
}

CVec assemble_Y(const CanonicalData& canon, const std::vector<CVec>& zeta) {
    const int m = static_cast<int>(canon.P.size());
    const int n = static_cast<int>(canon.P[0].rows());
    CVec Y(m * n);
    for (int i = 0; i < m; ++i) Y.segment(i * n, n) = canon.P[i] * zeta[i];
    return Y;
}

}  // namespace sse
