#pragma once

#include "sse/system_model.hpp"
#include "sse/types.hpp"

namespace sse {

// Inverted-pendulum benchmark. `raw` is the physical discretized plant
// (Ts = 0.02); `transformed` is the modally transformed system the estimator
// operates on (A diagonal, unstable-first: 1.0, 1.057, 0.999, 0.925).
// x_raw = V x_transformed; K_lqr acts on the raw state, so feedback on the
// transformed state uses K_lqr V.
struct PendulumPreset {
    LtiSystem raw;
    LtiSystem transformed;
    Mat V;            // modal matrix (columns: scaled eigenvectors of raw A)
    Mat T;            // V^-1
    Vec K_lqr;        // raw-state LQR gain [-8 -15 -115 -32]
    Mat K_lqr_modal;  // 1 x 4, K_lqr * V
    double Ts = 0.02;
    double kappa = 16.0;  // canonical free-row scale used by the preset
    Vec x0_raw;           // regulation example start [0 1 0 1]
};

PendulumPreset pendulum_preset();

// Theorem-5 demonstration presets: one unstable mode observed by two
// identical sensors, so removing 2p = 2 sensors destroys detectability.
struct ScalarUndetectablePreset {
    LtiSystem sys;
    std::vector<int> attack_set;  // {1, 2}
    CVec xi;
    Complex lambda;
};

ScalarUndetectablePreset undetectable_scalar_preset();    // lambda = 2
ScalarUndetectablePreset undetectable_marginal_preset();  // lambda = 1

}  // namespace sse
