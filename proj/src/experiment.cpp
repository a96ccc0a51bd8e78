#include "sse/experiment.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "sse/rng.hpp"

namespace sse {

namespace {

using nlohmann::json;

Mat mat_from_json(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        fail("ConfigError", name + " must be a 2-D array (row-major)");
    const int r = static_cast<int>(j.size());
    const int c = static_cast<int>(j.front().size());
    Mat M(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(j[i].size()) != c)
            fail("ConfigError", name + " has ragged rows");
        for (int k = 0; k < c; ++k) M(i, k) = j[i][k].get<double>();
    }
    return M;
}

Vec vec_from_json(const json& j, const std::string& name) {
    if (!j.is_array()) fail("ConfigError", name + " must be an array");
    Vec v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

json mat_to_json(const Mat& M) {
    json out = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        out.push_back(row);
    }
    return out;
}

double cond2(const CMat& M) {
    Eigen::JacobiSVD<CMat> svd(M);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

}  // namespace

Pipeline build_pipeline(const ExperimentConfig& cfg) {
    Pipeline pipe;
    ToleranceConfig tols = cfg.tols;
    if (cfg.preset == "pendulum") {
        PendulumPreset pp = pendulum_preset();
        pipe.sys = pp.transformed;
        pipe.state_map = pp.V;
        tols.null_row_scale = pp.kappa;
        if (cfg.controller.feedback || cfg.controller.u_seq.size() > 0) {
            pipe.controller = cfg.controller;
        } else {
            pipe.controller.feedback = true;
            pipe.controller.K_lqr = pp.K_lqr_modal;
        }
        // preset x0 is given in raw (physical) coordinates
        pipe.x0 = cfg.x0.size() ? Vec(pp.T * cfg.x0) : Vec(Vec::Zero(4));
    } else if (cfg.preset == "undetectable_scalar" || cfg.preset == "undetectable_marginal") {
        ScalarUndetectablePreset sp = cfg.preset == "undetectable_scalar"
                                          ? undetectable_scalar_preset()
                                          : undetectable_marginal_preset();
        pipe.sys = sp.sys;
        pipe.state_map = Mat::Identity(sp.sys.n, sp.sys.n);
        pipe.controller = cfg.controller;
        pipe.x0 = cfg.x0.size() ? cfg.x0 : Vec(Vec::Zero(sp.sys.n));
    } else if (cfg.preset.empty()) {
        if (cfg.sys.n == 0) fail("ConfigError", "no system given and no preset selected");
        pipe.sys = cfg.sys;
        pipe.state_map = Mat::Identity(cfg.sys.n, cfg.sys.n);
        pipe.controller = cfg.controller;
        pipe.x0 = cfg.x0.size() ? cfg.x0 : Vec(Vec::Zero(cfg.sys.n));
    } else {
        fail("ConfigError", "unknown preset '" + cfg.preset + "'");
    }
    pipe.random_x0 = cfg.random_x0;
    pipe.part = validate_system(pipe.sys, tols);
    pipe.ks = solve_steady_kalman(pipe.sys, tols);
    pipe.spec = decompose(pipe.ks, tols);
    pipe.bank = build_bank(pipe.sys, pipe.ks, pipe.spec, tols);
    pipe.cov = coverage(pipe.sys, tols);
    pipe.idx = sparse_indices(pipe.cov, pipe.part, pipe.sys.m);
    pipe.canon = build_canonical(pipe.sys, pipe.part, pipe.bank, pipe.cov, tols);
    return pipe;
}

SeedResult run_single(Pipeline& pipe, const ExperimentConfig& cfg, std::uint64_t seed,
                      const std::string& csv_path, bool with_bound) {
    const LtiSystem& sys = pipe.sys;
    const int n = sys.n, m = sys.m;
    Trajectory traj = simulate(sys, pipe.controller, cfg.attack, pipe.x0, cfg.steps,
                               seed, false, pipe.random_x0);
    const bool attack_free = cfg.attack.type == AttackType::None ||
                             cfg.attack.compromised_set.empty() ||
                             (cfg.attack.type == AttackType::Uniform &&
                              cfg.attack.magnitude == 0.0);

    Vec x0 = traj.x.row(0).transpose();
    Vec x_hat = x0, x_hat_o = x0;
    std::vector<CVec> zeta(m), zeta_o(m);
    for (int i = 0; i < m; ++i) {
        zeta[i] = pipe.bank.G[i] * x0.cast<Complex>();
        zeta_o[i] = zeta[i];
    }
    SecureSolver solver(pipe.canon);
    SolverConfig scfg = cfg.solver;
    scfg.gamma = cfg.gamma;

    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path);
        if (!csv) fail("IoError", "cannot open " + csv_path);
        csv << "k";
        for (int j = 1; j <= n; ++j) csv << ",x_" << j;
        for (int j = 1; j <= n; ++j) csv << ",x_tilde_" << j;
        for (int j = 1; j <= n; ++j) csv << ",x_hat_" << j;
        for (int j = 1; j <= n; ++j) csv << ",x_hat_oracle_" << j;
        csv << ",cond14_holds,cond14_lhs";
        if (with_bound)
            for (int j = 1; j <= n; ++j) csv << ",bound_diff_" << j << ",bound_rhs_" << j;
        csv << "\n" << std::setprecision(17);
    }

    SeedResult res;
    int recovered = 0;
    for (int k = 0; k < traj.N; ++k) {
        Vec u_prev = traj.u.row(k).transpose();
        Vec y = traj.y.row(k).transpose();
        Vec z = traj.z.row(k).transpose();
        Vec x_true = traj.x.row(k + 1).transpose();
        bank_step(pipe.bank, sys, pipe.spec, zeta, u_prev, y);
        bank_step(pipe.bank, sys, pipe.spec, zeta_o, u_prev, z);
        x_hat = filter_step(pipe.ks, sys, x_hat, u_prev, y);
        x_hat_o = filter_step(pipe.ks, sys, x_hat_o, u_prev, z);
        CVec Y = assemble_Y(pipe.canon, zeta);
        SecureSolve sol = solver.solve(Y, scfg);
        if (!sol.converged) ++res.nonconverged_steps;

        res.mse_secure += (pipe.state_map * (sol.x_tilde - x_true)).squaredNorm();
        res.mse_kalman_attacked += (pipe.state_map * (x_hat - x_true)).squaredNorm();
        res.mse_kalman_oracle += (pipe.state_map * (x_hat_o - x_true)).squaredNorm();

        RecoveryCheck rc;
        if (attack_free) {
            CVec eps(m * n);
            for (int i = 0; i < m; ++i)
                eps.segment(i * n, n) = zeta[i] - pipe.bank.G[i] * x_true.cast<Complex>();
            rc = check_recovery_condition(pipe.canon, pipe.bank, eps, x_hat_o, cfg.gamma);
            if (rc.holds) {
                ++recovered;
                if (max_abs(Vec(sol.x_tilde - x_hat_o)) > 1e-6) ++res.cond14_violations;
            }
        }
        BoundReport br;
        if (with_bound) {
            CVec eps_o(m * n);
            for (int i = 0; i < m; ++i)
                eps_o.segment(i * n, n) = zeta_o[i] - pipe.bank.G[i] * x_true.cast<Complex>();
            br = evaluate_bound(pipe.canon, pipe.bank, pipe.cov, sol.x_tilde, zeta_o,
                                x_hat_o, eps_o, cfg.gamma);
            res.bound_violations += br.violations;
        }
        if (csv.is_open()) {
            csv << (k + 1);
            for (int j = 0; j < n; ++j) csv << "," << x_true(j);
            for (int j = 0; j < n; ++j) csv << "," << sol.x_tilde(j);
            for (int j = 0; j < n; ++j) csv << "," << x_hat(j);
            for (int j = 0; j < n; ++j) csv << "," << x_hat_o(j);
            csv << "," << (attack_free && rc.holds ? 1 : 0) << "," << (attack_free ? rc.lhs : -1.0);
            if (with_bound)
                for (int j = 0; j < n; ++j) csv << "," << br.diff(j) << "," << br.rhs(j);
            csv << "\n";
        }
    }
    res.mse_secure /= traj.N;
    res.mse_kalman_attacked /= traj.N;
    res.mse_kalman_oracle /= traj.N;
    res.recovered_fraction = attack_free ? static_cast<double>(recovered) / traj.N : 0.0;
    return res;
}

MseReport run_experiment(Pipeline& pipe, const ExperimentConfig& cfg, bool with_bound) {
    MseReport rep;
    for (int s = 0; s < cfg.n_seeds; ++s) {
        std::string csv;
        if (!cfg.out_dir.empty())
            csv = cfg.out_dir + "/trajectory_seed" + std::to_string(cfg.seed + s) + ".csv";
        SeedResult r = run_single(pipe, cfg, cfg.seed + s, csv, with_bound);
        rep.per_seed.push_back(r);
        rep.mse_secure += r.mse_secure;
        rep.mse_kalman_attacked += r.mse_kalman_attacked;
        rep.mse_kalman_oracle += r.mse_kalman_oracle;
        rep.recovered_fraction += r.recovered_fraction;
        rep.cond14_violations += r.cond14_violations;
        rep.bound_violations += r.bound_violations;
        rep.nonconverged_steps += r.nonconverged_steps;
    }
    const double ns = static_cast<double>(cfg.n_seeds);
    rep.mse_secure /= ns;
    rep.mse_kalman_attacked /= ns;
    rep.mse_kalman_oracle /= ns;
    rep.recovered_fraction /= ns;
    return rep;
}

std::map<double, MseReport> sweep_gamma(Pipeline& pipe, ExperimentConfig cfg,
                                        const std::vector<double>& gammas) {
    std::map<double, MseReport> out;
    std::string out_dir = cfg.out_dir;
    cfg.out_dir.clear();  // per-gamma trajectory CSVs are not kept
    for (double g : gammas) {
        cfg.gamma = g;
        out[g] = run_experiment(pipe, cfg);
    }
    cfg.out_dir = out_dir;
    return out;
}

std::map<double, MseReport> sweep_attack_magnitude(Pipeline& pipe, ExperimentConfig cfg,
                                                   const std::vector<double>& magnitudes) {
    std::map<double, MseReport> out;
    cfg.out_dir.clear();
    if (cfg.attack.compromised_set.empty()) cfg.attack.compromised_set = {3};
    cfg.attack.type = AttackType::Uniform;
    for (double mag : magnitudes) {
        cfg.attack.magnitude = mag;
        out[mag] = run_experiment(pipe, cfg);
    }
    return out;
}

double estimate_recovery_probability(Pipeline& pipe, const ExperimentConfig& cfg,
                                     double gamma, int n_trials, std::uint64_t seed) {
    ExperimentConfig c = cfg;
    c.gamma = gamma;
    c.attack = AttackScenario{};
    c.out_dir.clear();
    double acc = 0.0;
    for (int t = 0; t < n_trials; ++t) acc += run_single(pipe, c, seed + t).recovered_fraction;
    return acc / n_trials;
}

UndetectableReport undetectable_demo(const ExperimentConfig& cfg, int n_steps,
                                     bool with_noise, const std::string& csv_path) {
    LtiSystem sys;
    std::vector<int> attack_set;
    CVec xi;
    Complex lambda;
    if (cfg.preset == "undetectable_scalar" || cfg.preset == "undetectable_marginal") {
        ScalarUndetectablePreset sp = cfg.preset == "undetectable_scalar"
                                          ? undetectable_scalar_preset()
                                          : undetectable_marginal_preset();
        sys = sp.sys;
        attack_set = sp.attack_set;
        xi = sp.xi;
        lambda = sp.lambda;
    } else {
        // search for a certificate: an unstable eigenvector of A annihilated
        // by every sensor outside some candidate attack set of size 2p
        if (cfg.preset == "pendulum")
            sys = pendulum_preset().transformed;
        else if (cfg.preset.empty() && cfg.sys.n > 0)
            sys = cfg.sys;
        else
            fail("ConfigError", "unknown preset '" + cfg.preset + "'");
        int p = cfg.attack.compromised_set.empty()
                    ? 1
                    : static_cast<int>(cfg.attack.compromised_set.size());
        const int set_size = 2 * p;
        Eigen::EigenSolver<Mat> es(sys.A);
        bool found = false;
        for (Eigen::Index e = 0; e < sys.n && !found; ++e) {
            if (std::abs(es.eigenvalues()(e)) < 1.0 - cfg.tols.stability_tol) continue;
            CVec cand = es.eigenvectors().col(e);
            // honest sensors that do not annihilate cand must all fit in the set
            std::vector<int> nonzero;
            for (int i = 0; i < sys.m; ++i)
                if (std::abs((sys.C.row(i).cast<Complex>() * cand).value()) >
                    1e-8 * (1.0 + max_abs(cand)))
                    nonzero.push_back(i + 1);
            if (static_cast<int>(nonzero.size()) <= set_size) {
                attack_set = nonzero;
                for (int i = 1; i <= sys.m && static_cast<int>(attack_set.size()) < set_size; ++i)
                    if (std::find(attack_set.begin(), attack_set.end(), i) == attack_set.end())
                        attack_set.push_back(i);
                std::sort(attack_set.begin(), attack_set.end());
                xi = cand;
                lambda = es.eigenvalues()(e);
                found = true;
            }
        }
        if (!found)
            fail("CertificateInvalid",
                 "no unstable eigenvector is hidden from the honest sensors; the "
                 "2p-sparse undetectable construction does not apply");
    }

    UndetectablePair pair = build_undetectable_attack(sys, attack_set, xi, lambda,
                                                      n_steps, cfg.seed, with_noise,
                                                      cfg.tols);
    UndetectableReport rep;
    rep.lambda_mod = std::abs(lambda);
    rep.state_gap = Vec(n_steps);
    for (int k = 0; k < n_steps; ++k) {
        rep.max_output_gap = std::max(
            rep.max_output_gap, max_abs(Vec(pair.system1.y.row(k) - pair.system2.y.row(k))));
        rep.state_gap(k) =
            (pair.system1.x.row(k + 1) - pair.system2.x.row(k + 1)).norm();
    }
    // least-squares slope of log state gap over k (noise-free: ln |lambda|)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int k = 0; k < n_steps; ++k) {
        if (!(rep.state_gap(k) > 0.0)) continue;
        double lk = std::log(rep.state_gap(k));
        sx += k;
        sy += lk;
        sxx += static_cast<double>(k) * k;
        sxy += k * lk;
        ++cnt;
    }
    if (cnt >= 2 && (cnt * sxx - sx * sx) > 0.0)
        rep.log_gap_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) fail("IoError", "cannot open " + csv_path);
        csv << "k,output_gap_inf,state_gap";
        for (int i = 1; i <= sys.m; ++i) csv << ",y1_" << i;
        for (int i = 1; i <= sys.m; ++i) csv << ",y2_" << i;
        csv << "\n" << std::setprecision(17);
        for (int k = 0; k < n_steps; ++k) {
            csv << (k + 1) << ","
                << max_abs(Vec(pair.system1.y.row(k) - pair.system2.y.row(k))) << ","
                << rep.state_gap(k);
            for (int i = 0; i < sys.m; ++i) csv << "," << pair.system1.y(k, i);
            for (int i = 0; i < sys.m; ++i) csv << "," << pair.system2.y(k, i);
            csv << "\n";
        }
    }
    return rep;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("IoError", "cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail("ParseError", std::string("invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    cfg.solver.abs_tol = 1e-10;
    cfg.solver.rel_tol = 1e-8;
    try {
        if (j.contains("preset")) cfg.preset = j["preset"].get<std::string>();
        if (j.contains("system")) {
            const json& s = j["system"];
            Mat A = mat_from_json(s.at("A"), "A");
            Mat B = mat_from_json(s.at("B"), "B");
            Mat C = mat_from_json(s.at("C"), "C");
            Mat Q = mat_from_json(s.at("Q"), "Q");
            Mat R = mat_from_json(s.at("R"), "R");
            Mat Sigma = s.contains("Sigma") ? mat_from_json(s["Sigma"], "Sigma") : Q;
            cfg.sys = make_system(A, B, C, Q, R, Sigma);
        }
        if (j.contains("controller")) {
            const json& c = j["controller"];
            std::string type = c.value("type", "none");
            if (type == "feedback") {
                cfg.controller.feedback = true;
                cfg.controller.K_lqr = mat_from_json(c.at("K"), "controller.K");
            } else if (type == "open_loop") {
                cfg.controller.u_seq = mat_from_json(c.at("u_seq"), "controller.u_seq");
            } else if (type != "none") {
                fail("ConfigError", "controller.type must be feedback, open_loop or none");
            }
        }
        if (j.contains("x0")) {
            if (j["x0"].is_string() && j["x0"].get<std::string>() == "random")
                cfg.random_x0 = true;
            else
                cfg.x0 = vec_from_json(j["x0"], "x0");
        }
        if (j.contains("attack")) {
            const json& a = j["attack"];
            std::string type = a.value("type", "none");
            if (type == "none")
                cfg.attack.type = AttackType::None;
            else if (type == "uniform")
                cfg.attack.type = AttackType::Uniform;
            else if (type == "constant_bias")
                cfg.attack.type = AttackType::ConstantBias;
            else if (type == "custom")
                cfg.attack.type = AttackType::Custom;
            else
                fail("ConfigError", "unknown attack.type '" + type + "'");
            if (a.contains("sensors"))
                cfg.attack.compromised_set = a["sensors"].get<std::vector<int>>();
            cfg.attack.magnitude = a.value("magnitude", 0.0);
            if (a.contains("bias")) cfg.attack.bias = vec_from_json(a["bias"], "attack.bias");
            if (a.contains("sequence"))
                cfg.attack.custom = mat_from_json(a["sequence"], "attack.sequence");
            cfg.attack.seed = a.value("seed", 0ull);
        }
        cfg.gamma = j.value("gamma", 10.0);
        cfg.steps = j.value("steps", 200);
        cfg.n_seeds = j.value("seeds", 1);
        cfg.seed = j.value("seed", 0ull);
        cfg.out_dir = j.value("out_dir", std::string());
        if (j.contains("tolerances")) {
            const json& t = j["tolerances"];
            ToleranceConfig& tc = cfg.tols;
            tc.stability_tol = t.value("stability_tol", tc.stability_tol);
            tc.rank_tol = t.value("rank_tol", tc.rank_tol);
            tc.col_tol = t.value("col_tol", tc.col_tol);
            tc.eig_gap_rel = t.value("eig_gap_rel", tc.eig_gap_rel);
            tc.riccati_tol = t.value("riccati_tol", tc.riccati_tol);
            tc.recon_tol = t.value("recon_tol", tc.recon_tol);
            tc.cond_v_max = t.value("cond_v_max", tc.cond_v_max);
            tc.cond_p_max = t.value("cond_p_max", tc.cond_p_max);
            tc.null_row_scale = t.value("null_row_scale", tc.null_row_scale);
        }
        if (j.contains("solver")) {
            const json& s = j["solver"];
            cfg.solver.rho = s.value("rho", cfg.solver.rho);
            cfg.solver.abs_tol = s.value("abs_tol", cfg.solver.abs_tol);
            cfg.solver.rel_tol = s.value("rel_tol", cfg.solver.rel_tol);
            cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail("ConfigError", std::string("bad config: ") + e.what());
    }
    return cfg;
}

std::string analyze_report(const ExperimentConfig& cfg) {
    Pipeline pipe = build_pipeline(cfg);
    json out;
    Eigen::EigenSolver<Mat> es(pipe.sys.A);
    json eigs = json::array();
    for (Eigen::Index i = 0; i < pipe.sys.n; ++i)
        eigs.push_back({{"re", es.eigenvalues()(i).real()},
                        {"im", es.eigenvalues()(i).imag()},
                        {"modulus", std::abs(es.eigenvalues()(i))}});
    out["eigenvalues"] = eigs;
    out["n"] = pipe.sys.n;
    out["m"] = pipe.sys.m;
    out["n_u"] = pipe.part.n_u;
    out["n_s"] = pipe.part.n_s;
    json pis = json::array();
    for (Eigen::Index i = 0; i < pipe.spec.pi.size(); ++i)
        pis.push_back({{"re", pipe.spec.pi(i).real()}, {"im", pipe.spec.pi(i).imag()}});
    out["closed_loop_eigenvalues"] = pis;
    json ej = json::array();
    for (const auto& e : pipe.cov.E) ej.push_back(std::vector<int>(e.begin(), e.end()));
    out["coverage_sets"] = ej;
    out["obs_index"] = pipe.idx.obs_index;
    out["det_index"] = pipe.idx.det_index;
    out["tolerable_p"] = pipe.idx.tolerable_p;
    out["cond_V"] = cond2(pipe.spec.V);
    json condp = json::array();
    json hpat = json::array();
    for (int i = 0; i < pipe.sys.m; ++i) {
        condp.push_back(cond2(pipe.canon.P[i]));
        // 0/1 pattern of the unstable columns of H_i = P_i G_i
        CMat Hi = pipe.canon.H.middleRows(i * pipe.sys.n, pipe.sys.n);
        json rows = json::array();
        for (int r = 0; r < pipe.canon.n_u; ++r) {
            json row = json::array();
            for (int c = 0; c < pipe.canon.n_u; ++c)
                row.push_back(std::abs(Hi(r, c)) > 1e-6 ? 1 : 0);
            rows.push_back(row);
        }
        hpat.push_back(rows);
    }
    out["cond_P"] = condp;
    out["H_unstable_pattern"] = hpat;
    out["norm_F_inf"] = pipe.canon.norm_F_inf;
    out["kalman_iterations"] = pipe.ks.iterations;
    out["P_steady"] = mat_to_json(pipe.ks.P);
    return out.dump(2);
}

}  // namespace sse
