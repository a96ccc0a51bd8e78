#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sse/canonical.hpp"
#include "sse/decomposition.hpp"
#include "sse/kalman.hpp"
#include "sse/presets.hpp"
#include "sse/secure_estimator.hpp"
#include "sse/system_model.hpp"

namespace sse {

struct ExperimentConfig {
    std::string preset;  // "pendulum", "undetectable_scalar", "undetectable_marginal" or empty
    LtiSystem sys;       // used when preset is empty
    Controller controller;
    AttackScenario attack;
    Vec x0;              // known-initial-state mode (default: zero)
    bool random_x0 = false;
    double gamma = 10.0;
    int steps = 200;
    int n_seeds = 1;
    std::uint64_t seed = 0;
    std::string out_dir;
    ToleranceConfig tols;
    SolverConfig solver;
};

// Everything derived from the plant, built once and shared by sweeps.
struct Pipeline {
    LtiSystem sys;
    StatePartition part;
    KalmanSteady ks;
    SpectralData spec;
    LocalBank bank;
    CoverageData cov;
    SparseIndices idx;
    CanonicalData canon;
    Mat state_map;  // reporting coordinates; V for the pendulum preset, else I
    Vec x0;
    bool random_x0 = false;
    Controller controller;
};

Pipeline build_pipeline(const ExperimentConfig& cfg);

struct SeedResult {
    double mse_secure = 0.0;
    double mse_kalman_attacked = 0.0;
    double mse_kalman_oracle = 0.0;
    double recovered_fraction = 0.0;  // steps where condition (14) held (attack-free only)
    int cond14_violations = 0;        // condition held but x_tilde != x_hat
    int bound_violations = 0;
    int nonconverged_steps = 0;
};

struct MseReport {
    double mse_secure = 0.0;
    double mse_kalman_attacked = 0.0;
    double mse_kalman_oracle = 0.0;
    double recovered_fraction = 0.0;
    int cond14_violations = 0;
    int bound_violations = 0;
    int nonconverged_steps = 0;
    std::vector<SeedResult> per_seed;
};

// Simulates one trajectory and runs the three estimators per step. If
// csv_path is nonempty, writes the per-step record (k, x, x_tilde, x_hat,
// x_hat_oracle, condition-14 flag/lhs, bound values).
SeedResult run_single(Pipeline& pipe, const ExperimentConfig& cfg, std::uint64_t seed,
                      const std::string& csv_path = "", bool with_bound = false);

MseReport run_experiment(Pipeline& pipe, const ExperimentConfig& cfg, bool with_bound = false);

std::map<double, MseReport> sweep_gamma(Pipeline& pipe, ExperimentConfig cfg,
                                        const std::vector<double>& gammas);

std::map<double, MseReport> sweep_attack_magnitude(Pipeline& pipe, ExperimentConfig cfg,
                                                   const std::vector<double>& magnitudes);

// Monte-Carlo frequency of condition (14) over attack-free stationary runs.
double estimate_recovery_probability(Pipeline& pipe, const ExperimentConfig& cfg,
                                     double gamma, int n_trials, std::uint64_t seed);

struct UndetectableReport {
    double max_output_gap = 0.0;   // max_k ||y1(k) - y2(k)||_inf
    Vec state_gap;                 // ||x1(k) - x2(k)||_2 per step
    double log_gap_slope = 0.0;    // least-squares slope of log gap (noise-free)
    double lambda_mod = 0.0;
};

UndetectableReport undetectable_demo(const ExperimentConfig& cfg, int n_steps,
                                     bool with_noise, const std::string& csv_path = "");

// JSON config loader (matrices row-major; scenario + tolerance blocks).
ExperimentConfig load_config(const std::string& path);

// `analyze` report: eigenvalues, partition, coverage sets, indices, canonical
// patterns and condition numbers, serialized as JSON text.
std::string analyze_report(const ExperimentConfig& cfg);

}  // namespace sse
