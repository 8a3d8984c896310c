#pragma once

#include <optional>
#include <vector>

#include "pme/dynamics.hpp"
#include "pme/grid.hpp"

namespace pme {

// point masses on the torus, weights summing to 1
struct AtomicMeasure {
    int dim = 1;
    std::vector<double> points;   // atom-major [i*dim + a]
    std::vector<double> weights;  // nonnegative

    std::size_t count() const { return weights.size(); }
};

AtomicMeasure atoms_from_field(const GridField& f);  // cell centers + masses
AtomicMeasure atoms_from_particles(const ParticleEnsemble& ens);

// monotone circle map data extracted at the optimal cut (1D only)
struct GeodesicData1D {
    double cut = 0.0;
    std::vector<double> map;  // T at the u-grid nodes, coordinates in [0,1)
    std::vector<double> v0;   // T(x)-x at u-grid nodes, wrapped to (-1/2,1/2]
    std::vector<double> v1;   // y-S(y) at v-grid nodes (S the inverse map)
};

struct TransportResult {
    enum class Method { quantile1d, sinkhorn, lp_oracle };
    double distance = 0.0;
    Method method = Method::quantile1d;
    long iterations = 0;
    bool converged = true;
    double cut = 0.0;             // quantile1d
    double raw_cost = 0.0;        // squared cost / <c,pi>
    double marginal_error = 0.0;  // sinkhorn
    double reg_final = 0.0;       // sinkhorn
    std::optional<GeodesicData1D> geodesic;
};

// Exact W2 on the circle by quantile matching with cut optimization: n
// coarse cut candidates (cell edges of the finer grid) then golden-section
// refinement to 1e-10 in the cut variable. Operands may live on different
// grids. Returns the optimal cut and induced monotone map.
TransportResult w2_circle_1d(const GridField& u, const GridField& v,
                             bool want_geodesic = true);

enum class OracleMode { automatic, enumerate, hungarian, simplex };

// Exact discrete optimum with torus-squared cost at exhaustive scale
// (<= 64 atoms per side): exhaustive assignment for equal-weight inputs of
// <= 8 atoms, Hungarian for larger equal-weight equal-count inputs,
// transportation simplex for general weights.
TransportResult lp_oracle(const AtomicMeasure& u, const AtomicMeasure& v,
                          OracleMode mode = OracleMode::automatic);

struct SinkhornParams {
    double reg_target = 5e-4;
    double reg_init = 1e-2;
    double anneal_factor = 0.7;
    int stage_iters = 10;      // iterations per annealing stage
    int max_iter = 4000;       // cap on total iterations of the final stage
    double marginal_tol = 1e-9;
    bool debias = true;
    bool want_raw_cost = false;
};

// Debiased entropic divergence sqrt(S(u,v)) on the torus; log-domain
// iterations with per-axis banded kernels (the cost is separable).
// Non-convergence is reported in the result, not thrown.
TransportResult w2_sinkhorn(const GridField& u, const GridField& v,
                            const SinkhornParams& params = {});

// dual value of the symmetric problem OT_reg(u,u), cacheable for debiasing
double sinkhorn_self_dual(const GridField& u, const SinkhornParams& params);
TransportResult w2_sinkhorn_debiased_with(const GridField& u,
                                          const GridField& v,
                                          const SinkhornParams& params,
                                          double self_u, double self_v);

// 1D: exact atomic-vs-density quantile distance (no deposition bias);
// d >= 2: deposit then Sinkhorn.
TransportResult w2_between_grid_and_particles(
    const GridField& u, const ParticleEnsemble& ens,
    const SinkhornParams& params = {});

}  // namespace pme
