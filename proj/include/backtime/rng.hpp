#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "backtime/matrix.hpp"

namespace backtime {

/// Deterministic random source. Gaussian and uniform draws are generated
/// with fixed algorithms (Box-Muller, 53-bit uniform) instead of the
/// standard-library distributions, whose output differs between standard
/// library implementations; seeded streams are therefore portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer uniform in [0, n). n must be > 0.
    int uniform_int(int n) {
        return static_cast<int>(uniform() * n) % n;
    }

    /// Standard normal via Box-Muller.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Mat gaussian_mat(int rows, int cols, double scale = 1.0) {
        Mat m(rows, cols);
        for (double& v : m.data()) v = scale * gaussian();
        return m;
    }

    Mat uniform_mat(int rows, int cols, double lo, double hi) {
        Mat m(rows, cols);
        for (double& v : m.data()) v = uniform(lo, hi);
        return m;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace backtime
