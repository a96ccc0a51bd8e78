#include "sse/presets.hpp"

namespace sse {

// Inverted pendulum on a cart, linearized about the upright equilibrium and
// discretized with Ts = 0.02 (zero-order hold). The continuous-time cart
// dynamics were calibrated so that the discrete plant has the simple spectrum
// {1.0, 1.057, 0.999, 0.925}: an exact integrator (cart position), one
// unstable pendulum mode and two stable modes. Four sensors: three redundant
// position encoders and one pendulum-angle encoder, so the position integrator
// is covered by E_1 = {1,2,3} and every other state by all four sensors.
PendulumPreset pendulum_preset() {
    PendulumPreset p;
    p.Ts = 0.02;
    p.kappa = 16.0;

    Mat Ar(4, 4);
    Ar << 1.0, 0.020362722974755748, -0.0007518623111725327, -6.606035143960145e-05,
          0.0, 1.0371828414412931, -0.07468161245657404, -0.005882360938679569,
          0.0, -0.055133177578452826, 0.9199810124544274, -0.06214611143510346,
          0.0, 0.0025005599304469845, 0.06182377754482122, 1.0238361461042795;
    Mat Br(4, 1);
    Br << 0.00012161853117520488, 0.01224405792542929, -8.19028522201897e-05,
          -0.008079296331072334;
    Mat Cr(4, 4);
    Cr << 1, 0, 0, 0,
          1, 0, 0, 0,
          1, 0, 0, 0,
          0, 0, 1, 0;
    Vec qdiag(4);
    qdiag << 0.1, 0.1, 0.01, 0.01;
    Mat Qraw = (p.Ts * p.Ts) * Mat(qdiag.asDiagonal());
    Mat Rraw = Qraw;  // same weights for the four sensors

    p.raw = make_system(Ar, Br, Cr, Qraw, Rraw, Qraw);

    // modal matrix: unit-norm eigenvectors of Ar (leading significant entry
    // positive), ordered 1.0, 1.057, 0.999, 0.925, scaled by 0.004
    Mat V(4, 4);
    V << 0.004, 0.0012561947408156753, 0.003978475774773965, 0.00047850112785440815,
         0.0, 0.003481839362574489, -0.00019902331699083432, -0.0018652342761262559,
         0.0, -0.0008236609244799848, -0.00012853589222324729, -0.0029509676607370485,
         0.0, -0.0012729305196508929, 0.00033999816652600646, 0.0018930735936803765;
    p.V = V;
    p.T = V.inverse();

    Vec eigs(4);
    eigs << 1.0, 1.057, 0.999, 0.925;
    Mat At = eigs.asDiagonal();
    Mat Bt = p.T * Br;
    Mat Ct = Cr * V;
    Mat Qt = p.T * Qraw * p.T.transpose();
    Qt = 0.5 * (Qt + Qt.transpose().eval());
    p.transformed = make_system(At, Bt, Ct, Qt, Rraw, Qt);

    p.K_lqr = Vec(4);
    p.K_lqr << -8.0, -15.0, -115.0, -32.0;
    p.K_lqr_modal = p.K_lqr.transpose() * V;  // 1 x 4

    p.x0_raw = Vec(4);
    p.x0_raw << 0.0, 1.0, 0.0, 1.0;
    return p;
}

namespace {

ScalarUndetectablePreset scalar_preset(double lambda) {
    // one unstable mode plus a stable companion state; two identical sensors
    // read the unstable state, a third reads the stable one. Removing sensors
    // {1, 2} (p = 1 attacked per subsystem) leaves the unstable mode unseen.
    ScalarUndetectablePreset sp;
    Mat A(2, 2);
    A << lambda, 0.0,
         0.0, 0.5;
    Mat B = Mat::Zero(2, 1);
    Mat C(3, 2);
    C << 1, 0,
         1, 0,
         0, 1;
    Mat Q = 0.01 * Mat::Identity(2, 2);
    Mat R = 0.01 * Mat::Identity(3, 3);
    sp.sys = make_system(A, B, C, Q, R, Q);
    sp.attack_set = {1, 2};
    sp.xi = CVec(2);
    sp.xi << Complex(1.0, 0.0), Complex(0.0, 0.0);
    sp.lambda = Complex(lambda, 0.0);
    return sp;
}

}  // namespace

ScalarUndetectablePreset undetectable_scalar_preset() { return scalar_preset(2.0); }

ScalarUndetectablePreset undetectable_marginal_preset() { return scalar_preset(1.0); }

}  // namespace sse
