#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace sse {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Structured error: every failure carries a stable machine-readable code so
// the CLI can emit error JSON without string matching.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

struct ToleranceConfig {
    double stability_tol = 1e-9;    // |lambda| >= 1 - stability_tol counts as unstable
    double rank_tol = 1e-10;        // relative singular-value threshold for rank decisions
    double col_tol = 1e-8;          // relative column-norm threshold for coverage sets
    double eig_gap_rel = 1e-8;      // pairwise eigenvalue gap, relative to max |pi|
    double riccati_tol = 1e-12;     // fixed-point stop, relative to 1 + ||P_plus||_inf
    long riccati_max_iter = 1000000;
    double recon_tol = 1e-9;        // eigendecomposition reconstruction residual
    double cond_v_max = 1e12;       // eigenvector matrix conditioning limit
    double cond_p_max = 1e10;       // canonical transform conditioning limit
    double null_row_scale = 1.0;    // target std of free canonical rows (W_i metric)
};

inline double inf_norm(const Mat& a) { return a.size() ? a.cwiseAbs().rowwise().sum().maxCoeff() : 0.0; }
inline double inf_norm(const CMat& a) { return a.size() ? a.cwiseAbs().rowwise().sum().maxCoeff() : 0.0; }
inline double max_abs(const Mat& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const CMat& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const Vec& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const CVec& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace sse
