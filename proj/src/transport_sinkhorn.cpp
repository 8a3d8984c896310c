#include <algorithm>
#include <cmath>
#include <limits>

#include "pme/common.hpp"
#include "pme/simd_ops.hpp"
#include "pme/transport.hpp"

namespace pme {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// per-axis Gibbs weights at a given regularization: w[j] = -d_T((o_lo+j) h)^2
// / reg, truncated where exp falls below e^-45 (or covering the full circle)
struct BandWeights {
    std::vector<double> w;
    int o_lo = 0;

    void build(double reg, int n, double h) {
        int B = static_cast<int>(std::ceil(std::sqrt(45.0 * reg) / h)) + 1;
        int len;
        if (2 * B + 1 >= n) {
            o_lo = -(n / 2);
            len = n;
        } else {
            o_lo = -B;
            len = 2 * B + 1;
        }
        w.resize(len);
        for (int j = 0; j < len; ++j) {
            double d = torus_dist1((o_lo + j) * h);
            w[j] = -d * d / reg;
        }
    }
};

// weights for the <c_a, pi> accumulation sweep: log(d^2) - d^2/reg
BandWeights cost_weights(double reg, int n, double h) {
    BandWeights bw;
    bw.build(reg, n, h);
    for (std::size_t j = 0; j < bw.w.size(); ++j) {
        double d = torus_dist1((bw.o_lo + static_cast<int>(j)) * h);
        bw.w[j] += d > 0.0 ? 2.0 * std::log(d) : kNegInf;
    }
    return bw;
}

struct Sweeper {
    PeriodicGrid grid;
    std::vector<double> xpad, out, line;

    explicit Sweeper(const PeriodicGrid& g) : grid(g) {}

    // in-place log-sum-exp kernel application along one axis
    void axis_lse(std::vector<double>& arr, int axis, const BandWeights& bw) {
        const int n = grid.n;
        const std::size_t wlen = bw.w.size();
        xpad.resize(n + wlen - 1);
        out.resize(n);
        std::size_t stride = 1;
        for (int a = grid.dim - 1; a > axis; --a) stride *= n;
        const std::size_t num_lines = arr.size() / n;
        for (std::size_t l = 0; l < num_lines; ++l) {
            std::size_t outer = l / stride, inner = l % stride;
            auto idx = [&](int j) { return (outer * n + j) * stride + inner; };
            for (std::size_t k = 0; k < xpad.size(); ++k) {
                int j = static_cast<int>((static_cast<long>(k) + bw.o_lo % n + n) % n);
                xpad[k] = arr[idx(j)];
            }
            simd::ops().band_lse(xpad.data(), n, bw.w.data(), wlen, out.data());
            for (int j = 0; j < n; ++j) arr[idx(j)] = out[j];
        }
    }

    // apply the full kernel in log domain: arr <- LSE_y(arr(y) - c(x,y)/reg),
    // optionally replacing one axis by the cost-weighted sweep
    void apply(std::vector<double>& arr, const BandWeights& bw,
               const BandWeights* cost_axis_bw = nullptr, int cost_axis = -1) {
        for (int a = 0; a < grid.dim; ++a)
            axis_lse(arr, a, (a == cost_axis && cost_axis_bw) ? *cost_axis_bw : bw);
    }
};

std::vector<double> log_measure(const GridField& u) {
    double loghd = u.grid.dim * std::log(u.grid.h);
    std::vector<double> lm(u.values.size());
    for (std::size_t i = 0; i < lm.size(); ++i)
        lm[i] = u.values[i] > 0.0 ? std::log(u.values[i]) + loghd : kNegInf;
    return lm;
}

std::vector<double> anneal_schedule(const SinkhornParams& p) {
    std::vector<double> regs;
    double r = std::max(p.reg_init, p.reg_target);
    while (r > p.reg_target * 1.0000001) {
        regs.push_back(r);
        r *= p.anneal_factor;
    }
    regs.push_back(p.reg_target);
    return regs;
}

struct AsymResult {
    std::vector<double> f, g;
    double dual = 0.0;
    double marginal_error = 0.0;
    long iterations = 0;
    bool converged = false;
};

// alternating log-domain updates; f is exact on the row marginal after an
// f-update, so convergence is read off the movement of g
AsymResult sinkhorn_asym(const GridField& u, const GridField& v,
                         const SinkhornParams& p) {
    const PeriodicGrid& grid = u.grid;
    const std::size_t N = grid.cell_count();
    std::vector<double> log_mu = log_measure(u), log_nu = log_measure(v);
    AsymResult R;
    R.f.assign(N, 0.0);
    R.g.assign(N, 0.0);
    Sweeper sw(grid);
    std::vector<double> tmp(N);
    std::vector<double> regs = anneal_schedule(p);
    double hd = 1.0;
    for (int a = 0; a < grid.dim; ++a) hd *= grid.h;

    for (std::size_t sidx = 0; sidx < regs.size(); ++sidx) {
        double reg = regs[sidx];
        BandWeights bw;
        bw.build(reg, grid.n, grid.h);
        bool final_stage = sidx + 1 == regs.size();
        int iters = final_stage ? p.max_iter : p.stage_iters;
        for (int it = 0; it < iters; ++it) {
            // f <- -reg LSE(g/reg + log_nu - c/reg)
            for (std::size_t i = 0; i < N; ++i)
                tmp[i] = R.g[i] / reg + log_nu[i];
            sw.apply(tmp, bw);
            for (std::size_t i = 0; i < N; ++i) R.f[i] = -reg * tmp[i];
            // g <- -reg LSE(f/reg + log_mu - c/reg), track movement
            for (std::size_t i = 0; i < N; ++i)
                tmp[i] = R.f[i] / reg + log_mu[i];
            sw.apply(tmp, bw);
            double viol = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                double gn = -reg * tmp[i];
                if (v.values[i] > 0.0)
                    viol += v.values[i] * hd *
                            std::abs(std::expm1((R.g[i] - gn) / reg));
                R.g[i] = gn;
            }
            ++R.iterations;
            R.marginal_error = viol;
            if (final_stage && viol <= p.marginal_tol) {
                R.converged = true;
                break;
            }
        }
    }
    double fd = 0.0, gd = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        if (u.values[i] > 0.0) fd += R.f[i] * u.values[i];
        if (v.values[i] > 0.0) gd += R.g[i] * v.values[i];
    }
    R.dual = (fd + gd) * hd;
    return R;
}

struct SymResult {
    std::vector<double> p;
    double dual = 0.0;
    long iterations = 0;
};

SymResult sinkhorn_sym(const GridField& u, const SinkhornParams& prm) {
    const PeriodicGrid& grid = u.grid;
    const std::size_t N = grid.cell_count();
    std::vector<double> log_mu = log_measure(u);
    SymResult R;
    R.p.assign(N, 0.0);
    Sweeper sw(grid);
    std::vector<double> tmp(N);
    std::vector<double> regs = anneal_schedule(prm);
    double hd = 1.0;
    for (int a = 0; a < grid.dim; ++a) hd *= grid.h;

    for (std::size_t sidx = 0; sidx < regs.size(); ++sidx) {
        double reg = regs[sidx];
        BandWeights bw;
        bw.build(reg, grid.n, grid.h);
        bool final_stage = sidx + 1 == regs.size();
        int iters = final_stage ? std::min(prm.max_iter, 200) : prm.stage_iters;
        for (int it = 0; it < iters; ++it) {
            for (std::size_t i = 0; i < N; ++i)
                tmp[i] = R.p[i] / reg + log_mu[i];
            sw.apply(tmp, bw);
            double move = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                double pn = 0.5 * (R.p[i] - reg * tmp[i]);
                if (u.values[i] > 0.0)
                    move = std::max(move, std::abs(pn - R.p[i]));
                R.p[i] = pn;
            }
            ++R.iterations;
            if (final_stage && move <= 0.5 * reg * prm.marginal_tol) break;
        }
    }
    double pd = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        if (u.values[i] > 0.0) pd += R.p[i] * u.values[i];
    R.dual = 2.0 * pd * hd;
    return R;
}

double raw_transport_cost(const GridField& u, const GridField& v,
                          const AsymResult& A, double reg) {
    const PeriodicGrid& grid = u.grid;
    const std::size_t N = grid.cell_count();
    std::vector<double> log_mu = log_measure(u), log_nu = log_measure(v);
    BandWeights bw;
    bw.build(reg, grid.n, grid.h);
    BandWeights cw = cost_weights(reg, grid.n, grid.h);
    Sweeper sw(grid);
    double total = 0.0;
    for (int a = 0; a < grid.dim; ++a) {
        std::vector<double> tmp(N);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = A.g[i] / reg + log_nu[i];
        sw.apply(tmp, bw, &cw, a);
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double e = A.f[i] / reg + log_mu[i] + tmp[i];
            if (std::isfinite(e)) s += std::exp(e);
        }
        total += s;
    }
    return total;
}

}  // namespace

double sinkhorn_self_dual(const GridField& u, const SinkhornParams& params) {
    return sinkhorn_sym(u, params).dual;
}

TransportResult w2_sinkhorn_debiased_with(const GridField& u,
                                          const GridField& v,
                                          const SinkhornParams& params,
                                          double self_u, double self_v) {
    require(u.grid == v.grid, "w2_sinkhorn: grids must match");
    require(u.grid.dim >= 1 && u.grid.dim <= 3, "w2_sinkhorn: dim in {1,2,3}");
    require(params.reg_target > 0.0, "w2_sinkhorn: reg must be positive");

    TransportResult res;
    res.method = TransportResult::Method::sinkhorn;
    res.reg_final = params.reg_target;
    if (u.values == v.values) {
        res.distance = 0.0;
        res.converged = true;
        return res;
    }
    AsymResult A = sinkhorn_asym(u, v, params);
    res.iterations = A.iterations;
    res.converged = A.converged;
    res.marginal_error = A.marginal_error;
    double S = A.dual;
    if (params.debias) S -= 0.5 * (self_u + self_v);
    res.distance = std::sqrt(std::max(S, 0.0));
    if (params.want_raw_cost)
        res.raw_cost = raw_transport_cost(u, v, A, params.reg_target);
    return res;
}

TransportResult w2_sinkhorn(const GridField& u, const GridField& v,
                            const SinkhornParams& params) {
    require(u.grid == v.grid, "w2_sinkhorn: grids must match");
    if (u.values == v.values) {
        TransportResult res;
        res.method = TransportResult::Method::sinkhorn;
        res.reg_final = params.reg_target;
        res.distance = 0.0;
        return res;
    }
    double su = 0.0, sv = 0.0;
    if (params.debias) {
        su = sinkhorn_self_dual(u, params);
        sv = sinkhorn_self_dual(v, params);
    }
    return w2_sinkhorn_debiased_with(u, v, params, su, sv);
}

}  // namespace pme
