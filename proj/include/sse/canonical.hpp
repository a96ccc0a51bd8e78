#pragma once

#include <set>
#include <vector>

#include "sse/decomposition.hpp"
#include "sse/system_model.hpp"
#include "sse/types.hpp"

namespace sse {

struct CoverageData {
    std::vector<Mat> O;               // per-sensor observability matrix, n x n
    std::vector<std::set<int>> E;     // E_j (1-based sensors), one set per state
};

CoverageData coverage(const LtiSystem& sys, const ToleranceConfig& tols = {});

// honest / compromised sensor counts for state j under attack set I (1-based)
std::pair<int, int> hc_counts(const CoverageData& cov, const std::vector<int>& attack_set, int j);

struct SparseIndices {
    int obs_index = -1;
    int det_index = -1;
    int tolerable_p = 0;
};

SparseIndices sparse_indices(const CoverageData& cov, const StatePartition& part, int m);

struct CanonicalData {
    std::vector<CMat> P;  // per-sensor transform, n x n
    CMat P_tilde;         // block diagonal of P_i, mn x mn
    CMat H;               // stacked P_i G_i, mn x n
    Mat N;                // m*n_s x m*n stable-row selector
    Mat L;                // n_s x n, [0 | I]
    CMat M_tilde;         // P~ W~ P~*
    CMat M_tilde_inv;
    CMat Wsc;             // script W, (mn + m n_s) square Hermitian PD
    CMat Fcal;            // script F (error-bound matrix), (mn + n_s) x mn
    double norm_F_inf = 0.0;
    int n_u = 0, n_s = 0;
};

// Theorem-2 construction. Pinned rows (unstable state j with i in E_j) are
// the minimum-norm solutions of p' G_i^U = e_j'; the remaining rows span the
// left null space of G_i^U, built by projected Gram-Schmidt over the standard
// basis (deterministic, unlike SVD null bases) and scaled so each row has
// std tols.null_row_scale under W_i.
CanonicalData build_canonical(const LtiSystem& sys, const StatePartition& part,
                              const LocalBank& bank, const CoverageData& cov,
                              const ToleranceConfig& tols = {});

// Y(k) = [P_1 zeta_1; ...; P_m zeta_m]
CVec assemble_Y(const CanonicalData& canon, const std::vector<CVec>& zeta);

}  // namespace sse
