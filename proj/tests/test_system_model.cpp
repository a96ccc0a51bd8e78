#include <doctest.h>

#include "oracles.hpp"
#include "sse/presets.hpp"
#include "sse/system_model.hpp"

using namespace sse;

namespace {

LtiSystem small_stable_system() {
    Mat A(2, 2);
    A << 0.5, 0.0,
         0.0, 0.3;
    Mat B(2, 1);
    B << 1, 1;
    Mat C(2, 2);
    C << 1, 0,
         0, 1;
    Mat Q = 0.1 * Mat::Identity(2, 2);
    Mat R = 0.1 * Mat::Identity(2, 2);
    return make_system(A, B, C, Q, R, Q);
}

}  // namespace

TEST_CASE("make_system rejects inconsistent dimensions") {
    Mat A = Mat::Identity(2, 2), B = Mat::Ones(3, 1), C = Mat::Ones(1, 2);
    CHECK_THROWS_AS(make_system(A, B, C, A, Mat::Identity(1, 1), A), Error);
}

TEST_CASE("validate_system classifies the pendulum partition") {
    PendulumPreset p = pendulum_preset();
    StatePartition part = validate_system(p.transformed);
    CHECK(part.n_u == 2);
    CHECK(part.n_s == 2);
    CHECK(part.A1(0, 0) == doctest::Approx(1.0));
    CHECK(part.A1(1, 1) == doctest::Approx(1.057));
}

TEST_CASE("validate_system error codes") {
    LtiSystem sys = small_stable_system();
    SUBCASE("singular A") {
        sys.A(0, 0) = 0.0;
        CHECK_THROWS_WITH_AS(validate_system(sys), "A is singular", Error);
    }
    SUBCASE("R not positive definite") {
        sys.R.setZero();
        CHECK_THROWS_AS(validate_system(sys), Error);
    }
    SUBCASE("not block ordered") {
        sys.A(0, 0) = 0.5;
        sys.A(1, 1) = 1.5;  // unstable eigenvalue in the trailing position
        bool ok = false;
        try {
            validate_system(sys);
        } catch (const Error& e) {
            ok = e.code() == "NotBlockOrdered";
        }
        CHECK(ok);
    }
    SUBCASE("derogatory unstable eigenvalue") {
        sys.A = 1.5 * Mat::Identity(2, 2);  // geometric multiplicity 2
        bool ok = false;
        try {
            validate_system(sys);
        } catch (const Error& e) {
            ok = e.code() == "DerogatoryUnstable";
        }
        CHECK(ok);
    }
    SUBCASE("unobservable pair") {
        sys.C.setZero();
        sys.C(0, 0) = 1.0;
        sys.C(1, 0) = 1.0;  // nobody sees state 2
        bool ok = false;
        try {
            validate_system(sys);
        } catch (const Error& e) {
            ok = e.code() == "NotObservable";
        }
        CHECK(ok);
    }
}

TEST_CASE("simulate replays exactly and is seed-deterministic") {
    PendulumPreset p = pendulum_preset();
    Controller ctl;
    ctl.feedback = true;
    ctl.K_lqr = p.K_lqr_modal;
    AttackScenario atk;
    atk.type = AttackType::Uniform;
    atk.compromised_set = {3};
    atk.magnitude = 1.0;
    Trajectory t1 = simulate(p.transformed, ctl, atk, Vec::Zero(4), 50, 7);
    Trajectory t2 = simulate(p.transformed, ctl, atk, Vec::Zero(4), 50, 7);
    Trajectory t3 = simulate(p.transformed, ctl, atk, Vec::Zero(4), 50, 8);
    CHECK(replay_residual(p.transformed, t1) < 1e-12);
    CHECK(max_abs(Mat(t1.y - t2.y)) == 0.0);          // bit-identical replay
    CHECK(max_abs(Mat(t1.y - t3.y)) > 0.0);           // seed changes the draw
    // attack support: only sensor 3, every step nonzero
    for (int k = 0; k < t1.N; ++k) {
        CHECK(t1.a(k, 0) == 0.0);
        CHECK(t1.a(k, 1) == 0.0);
        CHECK(t1.a(k, 3) == 0.0);
        CHECK(t1.a(k, 2) != 0.0);
    }
}

TEST_CASE("zero-noise closed loop decays under the preset LQR gain") {
    PendulumPreset p = pendulum_preset();
    Controller ctl;
    ctl.feedback = true;
    ctl.K_lqr = p.K_lqr.transpose();
    AttackScenario none;
    Trajectory t = simulate(p.raw, ctl, none, p.x0_raw, 2000, 0, /*zero_noise=*/true);
    CHECK(max_abs(Vec(t.x.row(2000).transpose())) < 1e-6);
    CHECK(max_abs(Vec(t.x.row(10).transpose())) > 1e-3);
}

TEST_CASE("gen_sparse_attack validates inputs") {
    AttackScenario atk;
    atk.type = AttackType::Uniform;
    atk.compromised_set = {5};
    atk.magnitude = 1.0;
    CHECK_THROWS_AS(gen_sparse_attack(atk, 4, 10), Error);
    atk.compromised_set = {1};
    CHECK_THROWS_AS(gen_sparse_attack(atk, 4, 0), Error);
    Mat a = gen_sparse_attack(atk, 4, 10);
    CHECK(a.rows() == 10);
    CHECK(a.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.col(0).cwiseAbs().minCoeff() > 0.0);
    CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("modal_transform recovers the pendulum eigenvalues in order") {
    PendulumPreset p = pendulum_preset();
    auto [T, At] = modal_transform(p.raw.A);
    Vec want(4);
    want << 1.057, 1.0, 0.999, 0.925;  // descending modulus
    for (int j = 0; j < 4; ++j) CHECK(At(j, j) == doctest::Approx(want(j)).epsilon(1e-10));
    CHECK(max_abs(Mat(At - Mat(At.diagonal().asDiagonal()))) < 1e-9);
}

TEST_CASE("undetectable construction: identical outputs, certificate enforced") {
    ScalarUndetectablePreset sp = undetectable_scalar_preset();
    UndetectablePair pair =
        build_undetectable_attack(sp.sys, sp.attack_set, sp.xi, sp.lambda, 30, 3,
                                  /*with_noise=*/true);
    for (int k = 0; k < 30; ++k)
        CHECK(max_abs(Vec(pair.system1.y.row(k) - pair.system2.y.row(k))) == 0.0);
    CHECK(replay_residual(sp.sys, pair.system1) < 1e-12);
    CHECK(replay_residual(sp.sys, pair.system2) < 1e-12);
    // noise-free gap grows exactly like |lambda|^k
    UndetectablePair nf =
        build_undetectable_attack(sp.sys, sp.attack_set, sp.xi, sp.lambda, 30, 3,
                                  /*with_noise=*/false);
    for (int k = 1; k <= 30; ++k) {
        double gap = (nf.system1.x.row(k) - nf.system2.x.row(k)).norm();
        CHECK(gap >= 0.99 * std::pow(2.0, k));
    }
    // a stable lambda or a broken certificate is rejected
    CHECK_THROWS_AS(build_undetectable_attack(sp.sys, sp.attack_set, sp.xi,
                                              Complex(0.5, 0.0), 10, 0),
                    Error);
    CVec bad = sp.xi;
    bad(1) = 1.0;  // no longer annihilated by the honest sensor
    CHECK_THROWS_AS(build_undetectable_attack(sp.sys, sp.attack_set, bad, sp.lambda, 10, 0),
                    Error);
}
