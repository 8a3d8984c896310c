#include "pme/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "pme/common.hpp"
#include "pme/simd_ops.hpp"

namespace pme {

namespace {

std::vector<double> velocity_direct(const ParticleEnsemble& ens,
                                    const TorusKernel& K) {
    const std::size_t N = ens.count();
    const int dim = ens.dim;
    std::vector<double> vel(N * dim, 0.0);
    const bool laplace = K.spec.family == KernelSpec::Family::laplace1d;
    std::vector<GridField> grad;
    if (!laplace) grad = kernel_gradient_fields(K);
    const double w = ens.weight();
    // v_i = -(grad R * u^N)(x_i) = -(1/N) sum_j (grad R)(x_i - x_j)
    for (std::size_t i = 0; i < N; ++i) {
        double acc[3] = {0.0, 0.0, 0.0};
        for (std::size_t j = 0; j < N; ++j) {
            if (laplace) {
                double dy = wrap_half(ens.positions[i] - ens.positions[j]);
                acc[0] += laplace_torus_grad(dy, K.epsilon);
            } else {
                double p[3];
                for (int a = 0; a < dim; ++a)
                    p[a] = wrap_unit(ens.positions[i * dim + a] -
                                     ens.positions[j * dim + a]);
                for (int a = 0; a < dim; ++a) acc[a] += sample_at(grad[a], p);
            }
        }
        for (int a = 0; a < dim; ++a) vel[i * dim + a] = -w * acc[a];
    }
    return vel;
}

std::vector<double> velocity_grid(const ParticleEnsemble& ens,
                                  const TorusKernel& K) {
    GridField uN = deposit_particles(ens, K.grid);
    SpectralCoefficients s = forward_transform(uN);
    simd::ops().rscale_cplx(reinterpret_cast<double*>(s.coeff.data()),
                            K.multipliers.data(), s.coeff.size());
    const std::size_t N = ens.count();
    const int dim = ens.dim;
    std::vector<double> vel(N * dim);
    for (int a = 0; a < dim; ++a) {
        SpectralCoefficients d = s;
        derivative_coeffs(d, a);
        GridField Va = inverse_transform(d);
        for (std::size_t i = 0; i < N; ++i)
            vel[i * dim + a] = -sample_at(Va, &ens.positions[i * dim]);
    }
    return vel;
}

void check_finite(const std::vector<double>& vel) {
    for (double v : vel)
        require(std::isfinite(v), "particle velocity is not finite");
}

double max_speed(const std::vector<double>& vel, int dim) {
    double m = 0.0;
    for (std::size_t i = 0; i + dim <= vel.size(); i += dim) {
        double sq = 0.0;
        for (int a = 0; a < dim; ++a) sq += vel[i + a] * vel[i + a];
        m = std::max(m, sq);
    }
    return std::sqrt(m);
}

ParticleEnsemble shifted(const ParticleEnsemble& ens,
                         const std::vector<double>& vel, double dt) {
    ParticleEnsemble out = ens;
    for (std::size_t i = 0; i < out.positions.size(); ++i)
        out.positions[i] = wrap_unit(out.positions[i] + dt * vel[i]);
    return out;
}

}  // namespace

std::vector<double> particle_velocity(const ParticleEnsemble& ens,
                                      const TorusKernel& K, VelocityMode mode) {
    require(ens.dim == K.grid.dim, "particle_velocity: dimension mismatch");
    require(ens.count() >= 1, "particle_velocity: empty ensemble");
    std::vector<double> vel = mode == VelocityMode::direct
                                  ? velocity_direct(ens, K)
                                  : velocity_grid(ens, K);
    check_finite(vel);
    return vel;
}

ParticleEnsemble step_particles(const ParticleEnsemble& ens,
                                const TorusKernel& K, double dt,
                                Integrator integ, VelocityMode mode) {
    require(dt > 0.0, "step_particles: dt must be positive");
    std::vector<double> k1 = particle_velocity(ens, K, mode);
    if (integ == Integrator::euler) return shifted(ens, k1, dt);
    std::vector<double> k2 =
        particle_velocity(shifted(ens, k1, 0.5 * dt), K, mode);
    std::vector<double> k3 =
        particle_velocity(shifted(ens, k2, 0.5 * dt), K, mode);
    std::vector<double> k4 = particle_velocity(shifted(ens, k3, dt), K, mode);
    ParticleEnsemble out = ens;
    for (std::size_t i = 0; i < out.positions.size(); ++i) {
        double v = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        out.positions[i] = wrap_unit(out.positions[i] + dt * v);
    }
    return out;
}

ParticleTrajectory simulate_particles(const ParticleEnsemble& ens0,
                                      const TorusKernel& K,
                                      const SolverConfig& cfg,
                                      VelocityMode mode) {
    ParticleTrajectory traj;
    traj.config = cfg;
    ParticleEnsemble ens = ens0;
    double t = 0.0;
    std::size_t snap = 0;
    auto record_due = [&]() {
        while (snap < cfg.snapshot_times.size() &&
               t >= cfg.snapshot_times[snap] - 1e-12) {
            traj.times.push_back(cfg.snapshot_times[snap]);
            traj.snapshots.push_back(ens);
            ++snap;
        }
    };
    record_due();
    while (t < cfg.horizon - 1e-12) {
        std::vector<double> vel = particle_velocity(ens, K, mode);
        double vmax = max_speed(vel, ens.dim);
        double dt = vmax > 0.0 ? cfg.cfl_factor * K.grid.h / vmax
                               : cfg.horizon - t;
        dt = std::min(dt, cfg.horizon - t);
        if (snap < cfg.snapshot_times.size())
            dt = std::min(dt, cfg.snapshot_times[snap] - t + 1e-15);
        dt = std::max(dt, 1e-12);
        ens = step_particles(ens, K, dt, cfg.integrator, mode);
        t += dt;
        record_due();
    }
    return traj;
}

GridField deposit_particles(const ParticleEnsemble& ens,
                            const PeriodicGrid& grid) {
    require(ens.dim == grid.dim, "deposit_particles: dimension mismatch");
    GridField f(grid, FieldKind::density);
    const int n = grid.n;
    const int dim = grid.dim;
    double hd = 1.0;
    for (int a = 0; a < dim; ++a) hd *= grid.h;
    const double wmass = ens.weight() / hd;
    for (std::size_t i = 0; i < ens.count(); ++i) {
        int base[3];
        double w[3];
        for (int a = 0; a < dim; ++a) {
            double t = wrap_unit(ens.positions[i * dim + a]) * n;
            int k = static_cast<int>(std::floor(t));
            if (k >= n) k = n - 1;
            base[a] = k;
            w[a] = t - k;
        }
        const int corners = 1 << dim;
        for (int c = 0; c < corners; ++c) {
            double weight = wmass;
            std::size_t idx = 0;
            for (int a = 0; a < dim; ++a) {
                int bit = (c >> a) & 1;
                int ia = base[a] + bit;
                if (ia >= n) ia -= n;
                weight *= bit ? w[a] : 1.0 - w[a];
                idx = idx * n + ia;
            }
            f.values[idx] += weight;
        }
    }
    return f;
}

ParticleEnsemble inverse_cdf_particles_1d(const GridField& u, std::size_t N) {
    require(u.grid.dim == 1, "inverse_cdf_particles_1d: 1D only");
    const int n = u.grid.n;
    const double h = u.grid.h;
    std::vector<double> cum(n + 1, 0.0);
    for (int j = 0; j < n; ++j)
        cum[j + 1] = cum[j] + std::max(u.values[j], 0.0) * h;
    double total = cum[n];
    require(total > 0.0, "inverse_cdf_particles_1d: zero mass");
    ParticleEnsemble ens;
    ens.dim = 1;
    ens.positions.resize(N);
    int j = 0;
    for (std::size_t i = 0; i < N; ++i) {
        double t = total * (i + 0.5) / N;
        while (j + 1 < n && cum[j + 1] <= t) ++j;
        double mj = cum[j + 1] - cum[j];
        double frac = mj > 0.0 ? (t - cum[j]) / mj : 0.5;
        ens.positions[i] = wrap_unit((j - 0.5 + frac) * h);
    }
    return ens;
}

ParticleEnsemble equispaced_particles(const PeriodicGrid& grid, std::size_t N) {
    ParticleEnsemble ens;
    ens.dim = grid.dim;
    if (grid.dim == 1) {
        ens.positions.resize(N);
        for (std::size_t i = 0; i < N; ++i) ens.positions[i] = double(i) / N;
        return ens;
    }
    std::size_t m = static_cast<std::size_t>(std::llround(
        std::pow(double(N), 1.0 / grid.dim)));
    std::size_t md = m;
    for (int a = 1; a < grid.dim; ++a) md *= m;
    require(md == N, "equispaced_particles: N must be a dim-th power");
    std::vector<double> pos;
    if (grid.dim == 2) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                pos.push_back(double(i) / m);
                pos.push_back(double(j) / m);
            }
    } else {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t k = 0; k < m; ++k) {
                    pos.push_back(double(i) / m);
                    pos.push_back(double(j) / m);
                    pos.push_back(double(k) / m);
                }
    }
    ens.positions = std::move(pos);
    return ens;
}

namespace {

// gathers a periodic line along `axis` into buf (n+1 entries, wrapped)
struct LineWalker {
    const PeriodicGrid& grid;
    int axis;
    std::size_t stride;     // between consecutive entries along axis
    std::size_t num_lines;  // product of other extents

    LineWalker(const PeriodicGrid& g, int ax) : grid(g), axis(ax) {
        stride = 1;
        for (int a = g.dim - 1; a > axis; --a) stride *= g.n;
        num_lines = g.cell_count() / g.n;
    }

    // flat index of entry j of line l
    std::size_t index(std::size_t l, int j) const {
        const int n = grid.n;
        std::size_t outer = l / stride;   // index over axes before `axis`
        std::size_t inner = l % stride;   // index over axes after `axis`
        return (outer * n + j) * stride + inner;
    }
};

}  // namespace

Trajectory solve_aggregation_grid(const GridField& u0, const TorusKernel& K,
                                  const SolverConfig& cfg) {
    require(u0.grid == K.grid, "solve_aggregation_grid: grid mismatch");
    const PeriodicGrid& grid = u0.grid;
    const int dim = grid.dim;
    const int n = grid.n;
    const double h = grid.h;

    Trajectory traj;
    traj.config = cfg;

    GridField u = u0;
    std::vector<double> comp(u.values.size(), 0.0);
    std::vector<double> delta(u.values.size());
    std::vector<double> uline(n + 1), vline(n), fline(n);

    // The advective CFL alone is not enough: the self-consistent velocity
    // makes this a (mollified) diffusion with linearized rate
    // (2 pi m)^2 R_hat(eps m) u around a constant state, so the explicit
    // step must also respect that stiffness or near-uniform states blow up.
    double lambda_max = 0.0;
    for (std::size_t i = 0; i < K.multipliers.size(); ++i) {
        double sq = 0.0;
        std::size_t rem = i;
        for (int a = dim - 1; a >= 0; --a) {
            int k = static_cast<int>(rem % n);
            rem /= n;
            double m = freq_of_index(k, n);
            sq += m * m;
        }
        lambda_max = std::max(lambda_max,
                              kTwoPi * kTwoPi * sq * K.multipliers[i]);
    }

    double t = 0.0;
    std::size_t snap = 0;
    double acc_energy = 0.0, acc_entropy = 0.0;
    double prev_d1 = 0.0, prev_d2 = 0.0, pending_dt = 0.0;
    auto record_due = [&]() {
        while (snap < cfg.snapshot_times.size() &&
               t >= cfg.snapshot_times[snap] - 1e-12) {
            traj.times.push_back(cfg.snapshot_times[snap]);
            GridField s = u;
            s.kind = u0.kind;
            traj.snapshots.push_back(std::move(s));
            traj.diss_energy.push_back(acc_energy);
            traj.diss_entropy.push_back(acc_entropy);
            ++snap;
        }
    };

    long step = 0;
    const long diag_every = 16;
    const double hd = std::pow(h, dim);
    for (;;) {
        SpectralCoefficients s = forward_transform(u);
        simd::ops().rscale_cplx(reinterpret_cast<double*>(s.coeff.data()),
                                K.multipliers.data(), s.coeff.size());

        // dissipation integrands at the current state: d2 is Parseval-exact
        // from the coefficients, d1 needs the center gradients of u_eps
        double d2 = 0.0;
        for (std::size_t i = 0; i < s.coeff.size(); ++i) {
            double sq = 0.0;
            std::size_t rem = i;
            for (int a = dim - 1; a >= 0; --a) {
                int k = static_cast<int>(rem % n);
                rem /= n;
                if (!is_nyquist(k, n)) {
                    double m = freq_of_index(k, n);
                    sq += m * m;
                }
            }
            // |grad R^1/2 * u|^2 summand: (2 pi |m|)^2 R_hat(eps m) |u_hat|^2;
            // s already carries one full multiplier, so divide one back out
            if (K.multipliers[i] > 0.0)
                d2 += kTwoPi * kTwoPi * sq * std::norm(s.coeff[i]) /
                      K.multipliers[i];
        }
        double d1 = 0.0;
        for (int a = 0; a < dim; ++a) {
            SpectralCoefficients d = s;
            derivative_coeffs(d, a);
            GridField ga = inverse_transform(d);
            for (std::size_t i = 0; i < u.values.size(); ++i)
                d1 += u.values[i] * ga.values[i] * ga.values[i];
        }
        d1 *= hd;
        if (pending_dt > 0.0) {
            acc_energy += 0.5 * pending_dt * (prev_d1 + d1);
            acc_entropy += 0.5 * pending_dt * (prev_d2 + d2);
        }
        prev_d1 = d1;
        prev_d2 = d2;

        record_due();
        if (t >= cfg.horizon - 1e-12) break;

        // face-centered velocities, one field per axis
        std::vector<GridField> vface;
        double speed_sum = 0.0;
        for (int a = 0; a < dim; ++a) {
            SpectralCoefficients d = s;
            derivative_coeffs(d, a);
            phase_shift_coeffs(d, a, 0.5 * h);
            GridField Va = inverse_transform(d);
            simd::ops().scale(Va.values.data(), -1.0, Va.values.size());
            double m = simd::ops().max_abs(Va.values.data(), Va.values.size());
            require(std::isfinite(m), "solve_aggregation_grid: velocity blow-up");
            speed_sum += m;
            vface.push_back(std::move(Va));
        }

        double dt = speed_sum > 0.0 ? cfg.cfl_factor * h / speed_sum
                                    : cfg.horizon - t;
        double umax = simd::ops().max_abs(u.values.data(), u.values.size());
        if (lambda_max * umax > 0.0)
            dt = std::min(dt, cfg.cfl_factor * 2.0 / (lambda_max * umax));
        dt = std::min(dt, cfg.horizon - t);
        if (snap < cfg.snapshot_times.size())
            dt = std::min(dt, cfg.snapshot_times[snap] - t + 1e-15);
        dt = std::max(dt, 1e-13);
        pending_dt = dt;

        std::fill(delta.begin(), delta.end(), 0.0);
        const double lam = dt / h;
        for (int a = 0; a < dim; ++a) {
            LineWalker lw(grid, a);
            for (std::size_t l = 0; l < lw.num_lines; ++l) {
                for (int j = 0; j < n; ++j) uline[j] = u.values[lw.index(l, j)];
                uline[n] = uline[0];
                // vface[a][index(l,j)] is the velocity at face j+1/2
                for (int j = 0; j < n; ++j) vline[j] = vface[a].values[lw.index(l, j)];
                simd::ops().upwind_flux(uline.data(), vline.data(), n, fline.data());
                for (int j = 0; j < n; ++j) {
                    double fl = fline[(j + n - 1) % n];
                    delta[lw.index(l, j)] -= lam * (fline[j] - fl);
                }
            }
        }
        simd::ops().add_compensated(u.values.data(), comp.data(), delta.data(),
                                    u.values.size());
        simd::ops().clamp_min(u.values.data(), 0.0, u.values.size());
        t += dt;
        ++step;
        if (step % diag_every == 1) {
            StepDiag d;
            d.time = t;
            d.dt = dt;
            d.mass = mass(u);
            d.max_velocity = speed_sum;
            traj.diagnostics.push_back(d);
        }
    }
    return traj;
}

Trajectory solve_pme_reference(const GridField& u0, const SolverConfig& cfg) {
    const PeriodicGrid& grid = u0.grid;
    const int dim = grid.dim;
    const int n = grid.n;
    const double h = grid.h;
    double lo = simd::ops().min_val(u0.values.data(), u0.values.size());
    require(lo >= -1e-12, "solve_pme_reference: negative initial data");
    double hi = simd::ops().max_abs(u0.values.data(), u0.values.size());
    require(std::isfinite(hi), "solve_pme_reference: unbounded initial data");

    Trajectory traj;
    traj.config = cfg;

    GridField u = u0;
    simd::ops().clamp_min(u.values.data(), 0.0, u.values.size());
    std::vector<double> comp(u.values.size(), 0.0);
    std::vector<double> w(u.values.size());
    std::vector<double> delta(u.values.size());
    std::vector<double> wpad_buf(n + 2);

    double t = 0.0;
    std::size_t snap = 0;
    auto record_due = [&]() {
        while (snap < cfg.snapshot_times.size() &&
               t >= cfg.snapshot_times[snap] - 1e-12) {
            traj.times.push_back(cfg.snapshot_times[snap]);
            traj.snapshots.push_back(u);
            ++snap;
        }
    };
    record_due();

    double dt_factor = 1.0;
    long step = 0;
    const double floor = 1e-6;
    // throttle per-step diagnostics; runs can take millions of steps
    long diag_every = std::max<long>(
        1, static_cast<long>(cfg.horizon * hi / (0.2 * h * h) / 8192.0));
    while (t < cfg.horizon - 1e-12) {
        double umax = simd::ops().max_abs(u.values.data(), u.values.size());
        double dt = dt_factor * 0.2 * h * h / std::max(umax, floor);
        require(dt > 1e-15, "solve_pme_reference: dt underflow");
        dt = std::min(dt, cfg.horizon - t);
        if (snap < cfg.snapshot_times.size())
            dt = std::min(dt, cfg.snapshot_times[snap] - t + 1e-16);

        simd::ops().mul(u.values.data(), u.values.data(), w.data(), w.size());
        std::fill(delta.begin(), delta.end(), 0.0);
        const double lam = 0.5 * dt / (h * h);
        std::vector<double>& wpad = wpad_buf;
        for (int a = 0; a < dim; ++a) {
            LineWalker lw(grid, a);
            for (std::size_t l = 0; l < lw.num_lines; ++l) {
                for (int j = 0; j < n; ++j) wpad[j + 1] = w[lw.index(l, j)];
                wpad[0] = wpad[n];
                wpad[n + 1] = wpad[1];
                for (int j = 0; j < n; ++j)
                    delta[lw.index(l, j)] +=
                        lam * (wpad[j + 2] - 2.0 * wpad[j + 1] + wpad[j]);
            }
        }
        simd::ops().add_compensated(u.values.data(), comp.data(), delta.data(),
                                    u.values.size());
        double newmax = simd::ops().max_abs(u.values.data(), u.values.size());
        if (newmax > umax * (1.0 + 1e-8) + 1e-12) {
            // discrete maximum principle violated: undo, halve the step rule
            simd::ops().scale(delta.data(), -1.0, delta.size());
            simd::ops().add_compensated(u.values.data(), comp.data(),
                                        delta.data(), u.values.size());
            dt_factor *= 0.5;
            require(dt_factor > 1e-6, "solve_pme_reference: dt collapsed");
            continue;
        }
        simd::ops().clamp_min(u.values.data(), 0.0, u.values.size());
        t += dt;
        ++step;
        if (step % diag_every == 1 || t >= cfg.horizon - 1e-12) {
            StepDiag d;
            d.time = t;
            d.dt = dt;
            d.mass = mass(u);
            d.max_velocity = 0.0;
            traj.diagnostics.push_back(d);
        }
        record_due();
    }
    return traj;
}

}  // namespace pme
