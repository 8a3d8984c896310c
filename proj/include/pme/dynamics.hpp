#pragma once

#include <vector>

#include "pme/grid.hpp"
#include "pme/kernels.hpp"

namespace pme {

// N equal-weight particles on [0,1)^d, the empirical measure
// (1/N) sum_i delta(x - x_i).
struct ParticleEnsemble {
    int dim = 1;
    std::vector<double> positions;  // particle-major: [i*dim + a]

    std::size_t count() const { return positions.size() / dim; }
    double weight() const { return 1.0 / double(count()); }
};

enum class Integrator { euler, rk4 };

struct SolverConfig {
    double horizon = 1.0;
    double cfl_factor = 0.5;
    std::vector<double> snapshot_times;  // sorted, within [0, horizon]
    Integrator integrator = Integrator::rk4;
};

struct StepDiag {
    double time = 0.0;
    double dt = 0.0;
    double mass = 0.0;
    double max_velocity = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<GridField> snapshots;
    SolverConfig config;
    std::vector<StepDiag> diagnostics;
    // cumulative dissipation integrals accumulated along the solver path
    // (aggregation solver only): int_0^t int u |grad u_eps|^2 and
    // int_0^t ||grad R^1/2 * u||^2, one entry per snapshot
    std::vector<double> diss_energy;
    std::vector<double> diss_entropy;
};

struct ParticleTrajectory {
    std::vector<double> times;
    std::vector<ParticleEnsemble> snapshots;
    SolverConfig config;
};

enum class VelocityMode { direct, grid };

// velocities of eq. dx_i/dt = -(1/N) sum_j grad R_eps(x_j - x_i);
// direct is the O(N^2) pairwise sum (closed-form periodized gradient for
// the Laplace family, interpolated kernel gradient otherwise), grid
// deposits, convolves spectrally and interpolates back.
std::vector<double> particle_velocity(const ParticleEnsemble& ens,
                                      const TorusKernel& K, VelocityMode mode);

ParticleEnsemble step_particles(const ParticleEnsemble& ens,
                                const TorusKernel& K, double dt,
                                Integrator integ,
                                VelocityMode mode = VelocityMode::grid);

ParticleTrajectory simulate_particles(const ParticleEnsemble& ens0,
                                      const TorusKernel& K,
                                      const SolverConfig& cfg,
                                      VelocityMode mode = VelocityMode::grid);

// conservative donor-cell upwind for du/dt + div(V_eps u) = 0 with
// V_eps = -grad(R_eps * u) evaluated spectrally at cell faces
Trajectory solve_aggregation_grid(const GridField& u0, const TorusKernel& K,
                                  const SolverConfig& cfg);

// explicit centered scheme for du/dt = (1/2) Lap(u^2); dt = 0.2 h^2 / max u,
// halved whenever the discrete maximum principle is violated
Trajectory solve_pme_reference(const GridField& u0, const SolverConfig& cfg);

// cloud-in-cell (multilinear) deposition; exact unit mass
GridField deposit_particles(const ParticleEnsemble& ens,
                            const PeriodicGrid& grid);

// deterministic placements for convergence studies
ParticleEnsemble inverse_cdf_particles_1d(const GridField& u, std::size_t N);
ParticleEnsemble equispaced_particles(const PeriodicGrid& grid, std::size_t N);

}  // namespace pme
