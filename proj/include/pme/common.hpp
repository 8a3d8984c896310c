#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace pme {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

// Deterministic RNG used by harness/tests: raw 64-bit stream through
// mt19937_64, converted by hand so results do not depend on libstdc++'s
// distribution internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(kTwoPi * u2);
        have_spare_ = true;
        return r * std::cos(kTwoPi * u2);
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// distance to the origin on the unit circle, |x|_T in one coordinate
inline double torus_dist1(double dx) {
    dx = dx - std::floor(dx);
    return dx <= 0.5 ? dx : 1.0 - dx;
}

// signed wrap of a displacement into (-1/2, 1/2]
inline double wrap_half(double dx) {
    dx = dx - std::floor(dx);  // [0,1)
    return dx > 0.5 ? dx - 1.0 : dx;
}

// wrap a coordinate into [0,1)
inline double wrap_unit(double x) {
    x = x - std::floor(x);
    if (x >= 1.0) x = 0.0;  // guards x = -1e-17 rounding up
    return x;
}

}  // namespace pme
