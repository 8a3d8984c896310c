#include <algorithm>
#include <cmath>

#include "pme/common.hpp"
#include "pme/transport.hpp"

namespace pme {

AtomicMeasure atoms_from_field(const GridField& f) {
    AtomicMeasure a;
    a.dim = f.grid.dim;
    const int n = f.grid.n;
    double hd = 1.0;
    for (int d = 0; d < f.grid.dim; ++d) hd *= f.grid.h;
    double total = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        double m = f.values[i] * hd;
        if (m <= 0.0) continue;
        std::size_t rem = i;
        int idx[3];
        for (int d = f.grid.dim - 1; d >= 0; --d) {
            idx[d] = static_cast<int>(rem % n);
            rem /= n;
        }
        for (int d = 0; d < f.grid.dim; ++d)
            a.points.push_back(idx[d] * f.grid.h);
        a.weights.push_back(m);
        total += m;
    }
    require(total > 0.0, "atoms_from_field: zero mass");
    for (double& w : a.weights) w /= total;
    return a;
}

AtomicMeasure atoms_from_particles(const ParticleEnsemble& ens) {
    AtomicMeasure a;
    a.dim = ens.dim;
    a.points = ens.positions;
    a.weights.assign(ens.count(), ens.weight());
    return a;
}

namespace {

// circle measure as ordered pieces (uniform segments or atoms) on a
// fundamental domain [L, L+1)
struct Pieces {
    std::vector<double> x0, x1, m, cum;  // cum[i] = mass before piece i
    double L = 0.0;
    std::size_t count() const { return m.size(); }
    double total() const { return cum.back(); }
};

Pieces pieces_from_field(const GridField& f) {
    Pieces P;
    const int n = f.grid.n;
    const double h = f.grid.h;
    P.L = -0.5 * h;  // cell j = [(j-1/2)h, (j+1/2)h)
    P.cum.push_back(0.0);
    for (int j = 0; j < n; ++j) {
        double m = std::max(f.values[j], 0.0) * h;
        if (m <= 0.0) continue;
        P.x0.push_back((j - 0.5) * h);
        P.x1.push_back((j + 0.5) * h);
        P.m.push_back(m);
        P.cum.push_back(P.cum.back() + m);
    }
    require(P.count() > 0, "w2_circle_1d: empty measure");
    return P;
}

Pieces pieces_from_atoms_1d(const AtomicMeasure& a) {
    std::vector<std::size_t> order(a.count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> pos(a.count());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = wrap_unit(a.points[i]);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return pos[i] < pos[j]; });
    Pieces P;
    P.L = 0.0;
    P.cum.push_back(0.0);
    for (std::size_t i : order) {
        if (a.weights[i] <= 0.0) continue;
        P.x0.push_back(pos[i]);
        P.x1.push_back(pos[i]);
        P.m.push_back(a.weights[i]);
        P.cum.push_back(P.cum.back() + a.weights[i]);
    }
    require(P.count() > 0, "atoms: empty measure");
    return P;
}

// measure unrolled at a cut: pieces in increasing order on [c, c+1)
struct Unrolled {
    std::vector<double> x0, x1, cum;  // cum has count()+1 entries
    std::size_t count() const { return x0.size(); }
    void clear() {
        x0.clear();
        x1.clear();
        cum.assign(1, 0.0);
    }
    void push(double a, double b, double m) {
        if (m <= 0.0) return;
        x0.push_back(a);
        x1.push_back(b);
        cum.push_back(cum.back() + m);
    }
};

void unroll_at(const Pieces& P, double c, Unrolled& out) {
    out.clear();
    double chat = c - std::floor(c - P.L);  // representative in [L, L+1)
    double back = chat - c;                 // integer shift to undo
    const std::size_t K = P.count();
    // straddler: last piece with x0 <= chat whose x1 > chat
    std::size_t s = std::upper_bound(P.x0.begin(), P.x0.end(), chat) -
                    P.x0.begin();  // pieces [0, s) have x0 <= chat
    bool split = false;
    std::size_t sp = 0;
    double frac_right = 0.0;
    if (s > 0 && P.x1[s - 1] > chat && P.x1[s - 1] > P.x0[s - 1]) {
        sp = s - 1;
        split = true;
        frac_right = (P.x1[sp] - chat) / (P.x1[sp] - P.x0[sp]);
    }
    if (split)
        out.push(chat - back, P.x1[sp] - back, P.m[sp] * frac_right);
    for (std::size_t k = s; k < K; ++k)
        out.push(P.x0[k] - back, P.x1[k] - back, P.m[k]);
    for (std::size_t k = 0; k < (split ? sp : s); ++k)
        out.push(P.x0[k] + 1.0 - back, P.x1[k] + 1.0 - back, P.m[k]);
    if (split)
        out.push(P.x0[sp] + 1.0 - back, chat + 1.0 - back,
                 P.m[sp] * (1.0 - frac_right));
}

inline double quantile_in(const Unrolled& U, std::size_t i, double t) {
    double m = U.cum[i + 1] - U.cum[i];
    if (m <= 0.0) return U.x0[i];
    double f = (t - U.cum[i]) / m;
    return U.x0[i] + f * (U.x1[i] - U.x0[i]);
}

// integral of (Q_A - Q_B)^2 dt over the common mass range; exact per merged
// interval (quantiles are linear there, Simpson closes the quadratic)
double quantile_cost(const Unrolled& A, const Unrolled& B) {
    std::size_t ia = 0, ib = 0;
    double t = 0.0, I = 0.0;
    const double T = std::min(A.cum.back(), B.cum.back());
    while (ia < A.count() && ib < B.count() && t < T) {
        double ea = A.cum[ia + 1], eb = B.cum[ib + 1];
        double t1 = std::min(std::min(ea, eb), T);
        if (t1 > t) {
            double a0 = quantile_in(A, ia, t), a1 = quantile_in(A, ia, t1);
            double b0 = quantile_in(B, ib, t), b1 = quantile_in(B, ib, t1);
            double d0 = a0 - b0, d1 = a1 - b1;
            double dm = 0.5 * (a0 + a1) - 0.5 * (b0 + b1);
            I += (t1 - t) / 6.0 * (d0 * d0 + 4.0 * dm * dm + d1 * d1);
            t = t1;
        }
        if (ea <= t1 + 1e-18) ++ia;
        if (eb <= t1 + 1e-18) ++ib;
    }
    return I;
}

struct CutSearch {
    const Pieces& PU;
    const Pieces& PV;
    Unrolled A, B;
    long evals = 0;

    double cost(double c) {
        ++evals;
        unroll_at(PU, c, A);
        unroll_at(PV, c, B);
        return quantile_cost(A, B);
    }
};

// mass of U before unrolled coordinate x (x in [c, c+1))
double cdf_at(const Unrolled& U, double x) {
    // first piece with x0 > x
    std::size_t k =
        std::upper_bound(U.x0.begin(), U.x0.end(), x) - U.x0.begin();
    if (k == 0) return 0.0;
    std::size_t i = k - 1;
    if (x >= U.x1[i]) return U.cum[i + 1];
    double len = U.x1[i] - U.x0[i];
    double f = len > 0.0 ? (x - U.x0[i]) / len : 1.0;
    return U.cum[i] + f * (U.cum[i + 1] - U.cum[i]);
}

// position of quantile t
double quantile_at(const Unrolled& U, double t) {
    t = std::clamp(t, 0.0, U.cum.back());
    std::size_t k =
        std::upper_bound(U.cum.begin(), U.cum.end(), t) - U.cum.begin();
    std::size_t i = k == 0 ? 0 : std::min(k - 1, U.count() - 1);
    return quantile_in(U, i, t);
}

TransportResult quantile_result(const Pieces& PU, const Pieces& PV,
                                double coarse_h, int n_candidates,
                                bool want_geodesic, const GridField* u,
                                const GridField* v) {
    CutSearch cs{PU, PV};
    double best_c = 0.0, best = 1e300;
    for (int j = 0; j < n_candidates; ++j) {
        double c = (j - 0.5) * coarse_h;
        double val = cs.cost(c);
        if (val < best) {
            best = val;
            best_c = c;
        }
    }
    // golden-section refinement around the best coarse candidate
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = best_c - coarse_h, hi = best_c + coarse_h;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = cs.cost(x1), f2 = cs.cost(x2);
    while (hi - lo > 1e-10) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = cs.cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = cs.cost(x2);
        }
    }
    double c_opt = 0.5 * (lo + hi);
    double cost_opt = cs.cost(c_opt);
    if (best < cost_opt) {
        cost_opt = best;
        c_opt = best_c;
    }

    TransportResult res;
    res.method = TransportResult::Method::quantile1d;
    res.distance = std::sqrt(std::max(cost_opt, 0.0));
    res.raw_cost = cost_opt;
    res.cut = wrap_unit(c_opt);
    res.iterations = cs.evals;

    if (want_geodesic && u) {
        Unrolled A, B;
        unroll_at(PU, c_opt, A);
        unroll_at(PV, c_opt, B);
        GeodesicData1D geo;
        geo.cut = wrap_unit(c_opt);
        const int nu = u->grid.n;
        geo.map.resize(nu);
        geo.v0.resize(nu);
        for (int j = 0; j < nu; ++j) {
            double x = j * u->grid.h;
            double xu = c_opt + (x - c_opt - std::floor(x - c_opt));
            double t = cdf_at(A, xu);
            double Tx = quantile_at(B, t);
            geo.map[j] = wrap_unit(Tx);
            geo.v0[j] = wrap_half(Tx - xu);
        }
        if (v) {
            const int nv = v->grid.n;
            geo.v1.resize(nv);
            for (int j = 0; j < nv; ++j) {
                double y = j * v->grid.h;
                double yu = c_opt + (y - c_opt - std::floor(y - c_opt));
                double t = cdf_at(B, yu);
                double Sy = quantile_at(A, t);
                geo.v1[j] = wrap_half(yu - Sy);
            }
        }
        res.geodesic = std::move(geo);
    }
    return res;
}

void check_density_1d(const GridField& f, const char* who) {
    require(f.grid.dim == 1, std::string(who) + ": 1D only");
    require(std::abs(mass(f) - 1.0) < 1e-6,
            std::string(who) + ": input must have unit mass");
}

}  // namespace

TransportResult w2_circle_1d(const GridField& u, const GridField& v,
                             bool want_geodesic) {
    check_density_1d(u, "w2_circle_1d");
    check_density_1d(v, "w2_circle_1d");
    Pieces PU = pieces_from_field(u);
    Pieces PV = pieces_from_field(v);
    int nf = std::max(u.grid.n, v.grid.n);
    return quantile_result(PU, PV, 1.0 / nf, nf, want_geodesic, &u, &v);
}

TransportResult w2_between_grid_and_particles(const GridField& u,
                                              const ParticleEnsemble& ens,
                                              const SinkhornParams& params) {
    require(u.grid.dim == ens.dim, "w2_between_grid_and_particles: dim mismatch");
    if (u.grid.dim == 1) {
        Pieces PU = pieces_from_field(u);
        Pieces PV = pieces_from_atoms_1d(atoms_from_particles(ens));
        return quantile_result(PU, PV, u.grid.h, u.grid.n, false, &u, nullptr);
    }
    GridField dep = deposit_particles(ens, u.grid);
    return w2_sinkhorn(u, dep, params);
}

}  // namespace pme
