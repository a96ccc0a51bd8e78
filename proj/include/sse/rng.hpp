#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sse/types.hpp"

namespace sse {

// Deterministic Gaussian source: mt19937_64 + explicit Box-Muller and an
// explicit 53-bit uniform mapping. std::normal_distribution and
// std::uniform_real_distribution are implementation-defined, which would
// break cross-platform reproducibility of seeded trajectories.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : eng_(seed) {}

    // uniform on (0, 1]: never returns 0 so log() below is safe
    double u01() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
    }

    // uniform on [-b, b)
    double uniform_sym(double b) {
        return b * (2.0 * ((static_cast<double>(eng_() >> 11)) * (1.0 / 9007199254740992.0)) - 1.0);
    }

    double gauss() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = u01();
        double u2 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Vec gauss_vec(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss();
        return v;
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// decorrelates the attack stream from the noise stream for a shared seed
inline std::uint64_t attack_stream_seed(std::uint64_t seed) {
    return seed ^ 0x9E3779B97F4A7C15ull;
}

}  // namespace sse
