#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pme/dynamics.hpp"
#include "pme/grid.hpp"
#include "pme/kernels.hpp"

namespace pme {

double quadratic_energy(const GridField& u);                        // int u^2/2
double interaction_energy(const GridField& u, const TorusKernel& K);  // E_eps
double entropy(const GridField& u);  // int u log u, 0 log 0 = 0

// per-snapshot energy bookkeeping along an aggregation trajectory
struct EnergyRow {
    double time = 0.0;
    double quadratic = 0.0;
    double interaction = 0.0;
    double entropy = 0.0;
    double half_norm_sq = 0.0;      // ||R^1/2 * u||_L2^2
    double dissipation_u = 0.0;     // int u |grad u_eps|^2
    double dissipation_half = 0.0;  // || grad R^1/2 * u ||_L2^2
    double lhs_energy = 0.0;    // half_norm_sq + int_0^t dissipation_u
    double lhs_entropy = 0.0;   // entropy + int_0^t dissipation_half
};

struct EnergyLedger {
    std::vector<EnergyRow> rows;
    double energy_slack = 0.0;   // max relative excess of lhs_energy
    double entropy_slack = 0.0;  // max relative excess of lhs_entropy
    bool energy_ok = false;      // both inequalities within 1e-6 relative
    bool entropy_ok = false;

    std::string to_csv() const;
};

EnergyLedger check_energy_dissipation(const Trajectory& traj,
                                      const TorusKernel& K,
                                      double rel_tol = 1e-6);

struct RatioReport {
    std::vector<double> eps;
    std::vector<double> max_ratio;  // per eps, max over trials
    double bound = 0.0;             // analytic bound when available
    double spread = 0.0;            // max/min across eps
    bool passed = false;
};

// || R_eta * f || <= C (eps/eta)^k || R_eps^1/2 * f || with the paper's
// C = (alpha + (1+b^2)/a)^1/2; trials mix smooth, white-noise and
// derivative-of-noise fields
RatioReport check_lemma_intermediate1(const KernelSpec& spec, double epsilon,
                                      double eta, const PeriodicGrid& grid,
                                      int trials, std::uint64_t seed = 99);

// eps * || |grad R_eps^1/2| * f || / || R_eps^1/2 * f || stable across eps
// for nonnegative f
RatioReport check_lemma_intermediate2(const KernelSpec& spec,
                                      const std::vector<double>& eps_list,
                                      const PeriodicGrid& grid, int trials,
                                      std::uint64_t seed = 99);

// space-time L2 norm of u - R^1/2 * u_tilde (trapezoid in time)
double l2_mollified_error(const Trajectory& u_traj, const Trajectory& ut_traj,
                          const TorusKernel& K);

struct CommutatorRow {
    double time = 0.0;
    double D = 0.0;
    double G = 0.0;
    double C = 0.0;
    double w2 = 0.0;
    double dhalf_w2_sq_dt = 0.0;  // centered finite difference, filled by caller
};

struct CommutatorLedger1D {
    std::vector<CommutatorRow> rows;
    std::string to_csv() const;
};

// the 1D decomposition D = G - C: v0/v1 from the optimal monotone map of
// w2_circle_1d(u, ut), D from the two transport velocities, C from the
// mollification error against div(u v0)
CommutatorRow commutator_decomposition_1d(const GridField& u,
                                          const GridField& ut,
                                          const TorusKernel& K);

}  // namespace pme
