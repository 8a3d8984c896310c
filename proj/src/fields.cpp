#include "pme/fields.hpp"

#include <cmath>

#include "pme/simd_ops.hpp"

namespace pme {

GridField smooth_random_density(const PeriodicGrid& grid, Rng& rng,
                                int max_mode, double amplitude) {
    const int n = grid.n;
    const int dim = grid.dim;
    struct Mode {
        int m[3];
        double amp, phase[3];
    };
    std::vector<Mode> modes;
    for (int q = 0; q < 2 * max_mode; ++q) {
        Mode md{};
        for (int a = 0; a < dim; ++a) {
            md.m[a] = 1 + static_cast<int>(rng.uniform() * max_mode);
            md.phase[a] = rng.uniform(0.0, kTwoPi);
        }
        md.amp = amplitude * rng.uniform(0.3, 1.0) / (2 * max_mode);
        modes.push_back(md);
    }
    GridField f = GridField::constant(grid, 1.0, FieldKind::density);
    std::size_t count = f.values.size();
    for (std::size_t i = 0; i < count; ++i) {
        int idx[3];
        std::size_t rem = i;
        for (int a = dim - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % n);
            rem /= n;
        }
        double v = 0.0;
        for (const Mode& md : modes) {
            double t = 1.0;
            for (int a = 0; a < dim; ++a)
                t *= std::sin(kTwoPi * md.m[a] * idx[a] * grid.h + md.phase[a]);
            v += md.amp * t;
        }
        f.values[i] += v;
    }
    simd::ops().clamp_min(f.values.data(), 0.05, f.values.size());
    return normalize_density(f);
}

GridField white_noise_field(const PeriodicGrid& grid, Rng& rng) {
    GridField f(grid, FieldKind::scalar);
    for (double& v : f.values) v = rng.normal();
    return f;
}

GridField noise_derivative_field(const PeriodicGrid& grid, Rng& rng) {
    GridField noise = white_noise_field(grid, rng);
    return gradient_spectral(noise)[0];
}

GridField nonneg_random_density(const PeriodicGrid& grid, Rng& rng) {
    GridField f(grid, FieldKind::density);
    for (double& v : f.values) v = std::max(0.0, 1.0 + 0.8 * rng.normal());
    return normalize_density(f);
}

GridField initial_condition(const std::string& name, double amplitude,
                            const PeriodicGrid& grid) {
    const int n = grid.n;
    const int dim = grid.dim;
    GridField f(grid, FieldKind::density);
    std::size_t count = f.values.size();
    for (std::size_t i = 0; i < count; ++i) {
        int idx[3];
        std::size_t rem = i;
        for (int a = dim - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % n);
            rem /= n;
        }
        double v = 1.0;
        if (name == "uniform") {
            v = 1.0;
        } else if (name == "sine") {
            v = 1.0 + amplitude * std::sin(kTwoPi * idx[0] * grid.h);
        } else if (name == "sineproduct") {
            double t = amplitude;
            for (int a = 0; a < dim; ++a) t *= std::sin(kTwoPi * idx[a] * grid.h);
            v = 1.0 + t;
        } else if (name == "bump") {
            double sq = 0.0;
            for (int a = 0; a < dim; ++a) {
                double d = torus_dist1(idx[a] * grid.h - 0.5);
                sq += d * d;
            }
            v = std::exp(-sq / 0.02);
        } else {
            require(false, "initial_condition: unknown name '" + name + "'");
        }
        f.values[i] = v;
    }
    return normalize_density(f);
}

}  // namespace pme
