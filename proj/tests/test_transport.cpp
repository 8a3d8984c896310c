#include <doctest.h>

#include <cmath>

#include "pme/common.hpp"
#include "pme/fields.hpp"
#include "pme/transport.hpp"

using namespace pme;

namespace {

GridField bump_1d(const PeriodicGrid& g, double center, double width) {
    GridField f(g, FieldKind::density);
    for (int j = 0; j < g.n; ++j) {
        double d = torus_dist1(j * g.h - center);
        f.values[j] = std::exp(-0.5 * d * d / (width * width));
    }
    return normalize_density(f);
}

GridField shift_field(const GridField& f, int cells) {
    GridField out = f;
    const int n = f.grid.n;
    for (int j = 0; j < n; ++j) out.values[(j + cells) % n] = f.values[j];
    return out;
}

AtomicMeasure random_atoms(Rng& rng, int count, int dim, bool equal_weights) {
    AtomicMeasure a;
    a.dim = dim;
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
        for (int d = 0; d < dim; ++d) a.points.push_back(rng.uniform());
        double w = equal_weights ? 1.0 : rng.uniform(0.2, 1.0);
        a.weights.push_back(w);
        total += w;
    }
    for (double& w : a.weights) w /= total;
    return a;
}

}  // namespace

TEST_CASE("w2_circle_1d basics") {
    PeriodicGrid g(1, 512);
    Rng rng(5);
    GridField u = smooth_random_density(g, rng);
    TransportResult same = w2_circle_1d(u, u);
    CHECK(same.distance <= 1e-12);

    // near-delta bumps at circle distance 0.3
    GridField a = bump_1d(g, 0.2, 1.5 * g.h);
    GridField b = bump_1d(g, 0.5, 1.5 * g.h);
    TransportResult r = w2_circle_1d(a, b);
    CHECK(std::abs(r.distance - 0.3) <= 2.0 * g.h);

    // distance wraps: bumps at 0.05 and 0.9 are 0.15 apart
    GridField c = bump_1d(g, 0.05, 1.5 * g.h);
    GridField d = bump_1d(g, 0.9, 1.5 * g.h);
    CHECK(std::abs(w2_circle_1d(c, d).distance - 0.15) <= 2.0 * g.h);
}

TEST_CASE("triangle inequality and symmetry on random densities") {
    PeriodicGrid g(1, 256);
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        GridField a = smooth_random_density(g, rng);
        GridField b = smooth_random_density(g, rng);
        GridField c = smooth_random_density(g, rng);
        double ab = w2_circle_1d(a, b).distance;
        double ba = w2_circle_1d(b, a).distance;
        double bc = w2_circle_1d(b, c).distance;
        double ac = w2_circle_1d(a, c).distance;
        CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
        CHECK(ac <= ab + bc + 1e-9);
    }
}

TEST_CASE("translation equivariance") {
    PeriodicGrid g(1, 512);
    Rng rng(2);
    GridField u = smooth_random_density(g, rng);
    for (int cells : {8, 64, 200, 256}) {
        double delta = cells * g.h;
        double want = std::min(delta, 1.0 - delta);
        TransportResult r = w2_circle_1d(u, shift_field(u, cells));
        CHECK(r.distance <= want + 1e-9);
    }
    // equality for a near-delta bump
    GridField b = bump_1d(g, 0.3, 1.5 * g.h);
    TransportResult r = w2_circle_1d(b, shift_field(b, 100));
    CHECK(std::abs(r.distance - 100 * g.h) <= 2.0 * g.h);
}

TEST_CASE("cut optimality and geodesic bounds") {
    PeriodicGrid g(1, 256);
    Rng rng(9);
    GridField u = smooth_random_density(g, rng);
    GridField v = smooth_random_density(g, rng);
    TransportResult r = w2_circle_1d(u, v);
    REQUIRE(r.geodesic.has_value());
    for (double d : r.geodesic->v0) CHECK(std::abs(d) <= 0.5 + 1e-12);
    for (double d : r.geodesic->v1) CHECK(std::abs(d) <= 0.5 + 1e-12);
    // monotone map on the cut circle: displacements differ by < 1 so the
    // unrolled map is increasing
    const GeodesicData1D& geo = *r.geodesic;
    double cut = geo.cut;
    std::vector<double> unrolled(g.n);
    for (int j = 0; j < g.n; ++j) {
        double x = j * g.h;
        double xu = cut + (x - cut - std::floor(x - cut));
        unrolled[j] = xu + geo.v0[j];
    }
    // sort nodes by unrolled coordinate and check mapped order
    std::vector<int> order(g.n);
    for (int j = 0; j < g.n; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        double xi = cut + (i * g.h - cut - std::floor(i * g.h - cut));
        double xj = cut + (j * g.h - cut - std::floor(j * g.h - cut));
        return xi < xj;
    });
    for (std::size_t k = 1; k < order.size(); ++k)
        CHECK(unrolled[order[k]] >= unrolled[order[k - 1]] - 1e-9);
}

TEST_CASE("lp_oracle: point masses and swaps") {
    AtomicMeasure a, b;
    a.dim = b.dim = 1;
    a.points = {0.2};
    a.weights = {1.0};
    b.points = {0.45};
    b.weights = {1.0};
    CHECK(lp_oracle(a, b).distance == doctest::Approx(0.25).epsilon(1e-14));

    // two atoms per side, swap-symmetric: cost = min(identity, crossed)
    AtomicMeasure u, v;
    u.dim = v.dim = 1;
    u.points = {0.1, 0.6};
    u.weights = {0.5, 0.5};
    v.points = {0.25, 0.75};
    v.weights = {0.5, 0.5};
    double identity_cost = 0.5 * (0.15 * 0.15) + 0.5 * (0.15 * 0.15);
    double crossed = 0.5 * (0.35 * 0.35) + 0.5 * (0.35 * 0.35);
    CHECK(lp_oracle(u, v).raw_cost ==
          doctest::Approx(std::min(identity_cost, crossed)).epsilon(1e-14));
}

TEST_CASE("network simplex equals exhaustive enumeration on 4-atom sets") {
    Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        AtomicMeasure a = random_atoms(rng, 4, trial % 2 ? 1 : 2, true);
        AtomicMeasure b = random_atoms(rng, 4, trial % 2 ? 1 : 2, true);
        TransportResult en = lp_oracle(a, b, OracleMode::enumerate);
        TransportResult si = lp_oracle(a, b, OracleMode::simplex);
        CHECK(si.raw_cost == en.raw_cost);
    }
}

TEST_CASE("hungarian equals exhaustive enumeration") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        AtomicMeasure a = random_atoms(rng, 7, 2, true);
        AtomicMeasure b = random_atoms(rng, 7, 2, true);
        TransportResult en = lp_oracle(a, b, OracleMode::enumerate);
        TransportResult hu = lp_oracle(a, b, OracleMode::hungarian);
        CHECK(hu.raw_cost == doctest::Approx(en.raw_cost).epsilon(1e-14));
    }
}

// sparse equal-mass piecewise-constant densities: the atomic rendering at
// cell centers aligns quantile boundaries exactly, so the two computations
// agree to O(h^2) and the 1e-6 relative comparison is meaningful
TEST_CASE("quantile method matches the lp oracle on sparse densities") {
    Rng rng(77);
    PeriodicGrid g(1, 8192);
    for (int trial = 0; trial < 5; ++trial) {
        GridField u(g, FieldKind::density), v(g, FieldKind::density);
        const int K = 12;
        for (int k = 0; k < K; ++k) {
            int cu, cv;
            do cu = int(rng.uniform() * g.n); while (u.values[cu] > 0.0);
            do cv = int(rng.uniform() * g.n); while (v.values[cv] > 0.0);
            u.values[cu] = 1.0;
            v.values[cv] = 1.0;
        }
        u = normalize_density(u);
        v = normalize_density(v);
        TransportResult quant = w2_circle_1d(u, v, false);
        TransportResult lp = lp_oracle(atoms_from_field(u), atoms_from_field(v));
        CHECK(quant.distance == doctest::Approx(lp.distance).epsilon(1e-6));
    }
    // unequal masses still agree at the O(h) alignment level
    for (int trial = 0; trial < 3; ++trial) {
        GridField u(g, FieldKind::density), v(g, FieldKind::density);
        for (int k = 0; k < 10; ++k) {
            u.values[int(rng.uniform() * g.n)] += rng.uniform(0.5, 1.5);
            v.values[int(rng.uniform() * g.n)] += rng.uniform(0.5, 1.5);
        }
        u = normalize_density(u);
        v = normalize_density(v);
        TransportResult quant = w2_circle_1d(u, v, false);
        TransportResult lp = lp_oracle(atoms_from_field(u), atoms_from_field(v));
        CHECK(quant.distance == doctest::Approx(lp.distance).epsilon(2e-3));
    }
}

TEST_CASE("lp_oracle guards") {
    Rng rng(1);
    AtomicMeasure a = random_atoms(rng, 65, 1, true);
    AtomicMeasure b = random_atoms(rng, 4, 1, true);
    CHECK_THROWS(lp_oracle(a, b));
}

TEST_CASE("sinkhorn: identical inputs and 1D calibration") {
    PeriodicGrid g(1, 512);
    Rng rng(13);
    GridField u = smooth_random_density(g, rng);
    SinkhornParams p;
    p.reg_target = 5e-4;
    CHECK(w2_sinkhorn(u, u, p).distance == 0.0);

    for (int trial = 0; trial < 3; ++trial) {
        GridField a = smooth_random_density(g, rng);
        GridField b = smooth_random_density(g, rng);
        double exact = w2_circle_1d(a, b, false).distance;
        TransportResult s = w2_sinkhorn(a, b, p);
        CHECK(std::abs(s.distance - exact) <= 0.02 * exact);
    }
}

TEST_CASE("sinkhorn tensorization in 2D") {
    PeriodicGrid g1(1, 64);
    PeriodicGrid g2(2, 64);
    Rng rng(29);
    GridField a1 = smooth_random_density(g1, rng);
    GridField b1 = smooth_random_density(g1, rng);
    // product densities u = a1 x a1, v = b1 x b1
    GridField u(g2, FieldKind::density), v(g2, FieldKind::density);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            u.values[i * 64 + j] = a1.values[i] * a1.values[j];
            v.values[i * 64 + j] = b1.values[i] * b1.values[j];
        }
    double w1 = w2_circle_1d(a1, b1, false).distance;
    double exact = std::sqrt(2.0) * w1;
    SinkhornParams p;
    p.reg_target = 2e-4;
    TransportResult s = w2_sinkhorn(u, v, p);
    CHECK(std::abs(s.distance - exact) <= 0.03 * exact);
}

TEST_CASE("grid vs particles") {
    PeriodicGrid g(1, 1024);
    GridField u = initial_condition("sine", 0.5, g);
    // inverse-CDF samples converge with rate ~1/N
    double prev = 1e9;
    for (std::size_t N : {100u, 1000u, 10000u}) {
        ParticleEnsemble ens = inverse_cdf_particles_1d(u, N);
        TransportResult r = w2_between_grid_and_particles(u, ens);
        CHECK(r.distance < prev);
        CHECK(r.distance <= 2.0 / double(N) + 2.0 * g.h / std::sqrt(double(N)));
        prev = r.distance;
    }
    // uniform atoms vs uniform density: exact quantile mismatch <= 1/(2N)
    GridField uni = GridField::constant(g, 1.0, FieldKind::density);
    ParticleEnsemble eq = equispaced_particles(g, 128);
    TransportResult r = w2_between_grid_and_particles(uni, eq);
    CHECK(r.distance <= 1.0 / 256.0 + 1e-12);

    // one particle vs a co-located near-delta bump
    ParticleEnsemble one;
    one.dim = 1;
    one.positions = {512.0 * g.h};
    GridField delta(g, FieldKind::density);
    delta.values[512] = 1.0 / g.h;
    TransportResult d = w2_between_grid_and_particles(delta, one);
    CHECK(d.distance <= 2.0 * g.h);
}
