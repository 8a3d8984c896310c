#include <doctest.h>

#include <cmath>

#include "pme/common.hpp"
#include "pme/fields.hpp"
#include "pme/kernels.hpp"

using namespace pme;

namespace {

// closed-form spatial kernels for the 1D profiles (residue calculus),
// independent of the spectral construction they cross-check
double matern1d_spatial(double s, double x) {
    double ax = std::abs(x);
    double e = std::exp(-kTwoPi * ax);
    if (s == 1.0) return kPi * e;
    if (s == 2.0) return 0.5 * kPi * (1.0 + kTwoPi * ax) * e;
    if (s == 3.0)
        return kPi / 8.0 *
               (3.0 + 6.0 * kPi * ax + 4.0 * kPi * kPi * ax * ax) * e;
    REQUIRE(false);
    return 0.0;
}

}  // namespace

TEST_CASE("matern profile and envelope constants") {
    KernelSpec k = matern_kernel(2.0, 1);
    CHECK(k.profile(0.0) == 1.0);
    CHECK(k.profile(1.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(1.0 / k.alpha == doctest::Approx(0.25).epsilon(1e-15));
    // |xi| = 2: value 1/25 inside [a 2^-2k, b 2^-k] = [1/64, 1/4]
    CHECK(k.profile(2.0) == doctest::Approx(1.0 / 25.0).epsilon(1e-15));
    CHECK(k.a * std::pow(2.0, -4) <= k.profile(2.0));
    CHECK(k.profile(2.0) <= k.b * std::pow(2.0, -2));
    CHECK_THROWS(matern_kernel(-1.0, 1));
}

TEST_CASE("laplace 1d profile") {
    KernelSpec k = laplace_kernel_1d();
    CHECK(k.profile(0.0) == 1.0);
    // R_hat(1/(2 pi)) = 1/2
    CHECK(k.profile(1.0 / kTwoPi) == doctest::Approx(0.5).epsilon(1e-14));
    // spatial density integrates to one and is convex away from zero
    double m = 0.0, dx = 1e-3;
    for (double x = -20.0; x < 20.0; x += dx) m += laplace_density(x, 1.0) * dx;
    CHECK(m == doctest::Approx(1.0).epsilon(1e-4));
    for (double x : {0.3, 1.0, -2.0}) {
        double dd = (laplace_density(x + 1e-4, 1.0) -
                     2.0 * laplace_density(x, 1.0) +
                     laplace_density(x - 1e-4, 1.0)) / 1e-8;
        CHECK(dd > 0.0);
    }
}

TEST_CASE("realize_on_torus multipliers and spatial field") {
    PeriodicGrid g(1, 256);
    KernelSpec spec = matern_kernel(2.0, 1);
    TorusKernel K = realize_on_torus(spec, 0.1, g);
    CHECK(K.multipliers[0] == 1.0);
    // multiplier at m=5: (1 + 0.25)^-2 = 0.64
    CHECK(K.multipliers[5] == doctest::Approx(0.64).epsilon(1e-14));
    CHECK(mass(K.spatial) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS(realize_on_torus(spec, 0.004, g));  // below 2h
    CHECK(realize_on_torus(spec, 0.012, g).resolution_warning);
}

TEST_CASE("spectral spatial field matches the direct lattice sum") {
    // admissible exponents (s >= 2 in 1D) decay fast enough to compare at
    // 1e-8; the k=1 profiles are tail-limited at ~ 1/(eps^2 n) and get a
    // tolerance matching that truncation level
    PeriodicGrid g(1, 4096);
    for (double s : {2.0, 3.0}) {
        KernelSpec spec = matern_kernel(s, 1);
        TorusKernel K = realize_on_torus(spec, 0.2, g);
        for (int j : {0, 17, 1000, 2048, 3000}) {
            double x = j * g.h;
            double direct = 0.0;
            for (int m = -8; m <= 8; ++m)
                direct += matern1d_spatial(s, (x + m) / 0.2) / 0.2;
            CHECK(K.spatial.values[j] == doctest::Approx(direct).epsilon(1e-8));
        }
    }
    {
        KernelSpec spec = matern_kernel(1.0, 1);
        TorusKernel K = realize_on_torus(spec, 0.2, g);
        for (int j : {0, 17, 1000, 2048}) {
            double x = j * g.h;
            double direct = 0.0;
            for (int m = -8; m <= 8; ++m)
                direct += matern1d_spatial(1.0, (x + m) / 0.2) / 0.2;
            CHECK(K.spatial.values[j] == doctest::Approx(direct).epsilon(5e-3));
        }
    }
    KernelSpec lap = laplace_kernel_1d();
    TorusKernel K = realize_on_torus(lap, 0.05, g);
    for (int j : {0, 100, 2048}) {
        double x = j * g.h;
        double direct = 0.0;
        for (int m = -8; m <= 8; ++m) direct += laplace_density(x + m, 0.05);
        CHECK(K.spatial.values[j] == doctest::Approx(direct).epsilon(5e-3));
    }
    // well-resolved non-negativity
    TorusKernel M = realize_on_torus(matern_kernel(2.0, 1), 0.2, g);
    double lo = 0.0;
    for (double v : M.spatial.values) lo = std::min(lo, v);
    CHECK(lo >= -1e-10);
}

TEST_CASE("sqrt kernel") {
    PeriodicGrid g(1, 512);
    TorusKernel K = realize_on_torus(matern_kernel(2.0, 1), 0.1, g);
    TorusKernel H = sqrt_kernel(K);
    // matern s=2 square root is matern s=1: at eps*m = 1 the multiplier is 1/2
    CHECK(H.multipliers[10] == doctest::Approx(0.5).epsilon(1e-14));
    // H * H = K spatially
    GridField HH = convolve_periodic(H.spatial, H.spatial);
    for (int j = 0; j < 512; ++j)
        CHECK(HH.values[j] == doctest::Approx(K.spatial.values[j]).epsilon(1e-10));
    // sqrt of the all-ones multiplier kernel is itself
    TorusKernel I = K;
    std::fill(I.multipliers.begin(), I.multipliers.end(), 1.0);
    TorusKernel HI = sqrt_kernel(I);
    for (double m : HI.multipliers) CHECK(m == 1.0);
    // involution: sqrt(sqrt(K)) = fourth root
    TorusKernel Q = sqrt_kernel(H);
    for (std::size_t i = 0; i < Q.multipliers.size(); ++i)
        CHECK(Q.multipliers[i] ==
              doctest::Approx(std::pow(K.multipliers[i], 0.25)).epsilon(1e-12));
}

TEST_CASE("intermediate kernel") {
    PeriodicGrid g(1, 512);
    KernelSpec spec = matern_kernel(2.0, 1);
    TorusKernel L = intermediate_kernel(spec, 0.1, 0.05, g);
    // m=20: ((1+1)/(1+4))^2 = 0.16
    CHECK(L.multipliers[20] == doctest::Approx(0.16).epsilon(1e-14));
    CHECK_THROWS(intermediate_kernel(spec, 0.05, 0.1, g));

    // R_eta * L = R_eps spatially
    TorusKernel Keta = realize_on_torus(spec, 0.05, g);
    TorusKernel Keps = realize_on_torus(spec, 0.1, g);
    GridField conv = convolve_periodic(Keta.spatial, L.spatial);
    for (int j = 0; j < 512; ++j)
        CHECK(conv.values[j] ==
              doctest::Approx(Keps.spatial.values[j]).epsilon(1e-10));
}

TEST_CASE("first moment") {
    PeriodicGrid g(1, 1024);
    TorusKernel delta = realize_on_torus(matern_kernel(2.0, 1), 0.1, g);
    delta.spatial = GridField(g, FieldKind::scalar);
    delta.spatial.values[0] = 1.0 / g.h;
    CHECK(first_moment(delta) == doctest::Approx(0.0));

    TorusKernel uni = delta;
    std::fill(uni.spatial.values.begin(), uni.spatial.values.end(), 1.0);
    CHECK(first_moment(uni) == doctest::Approx(0.25).epsilon(1e-4));

    // moment(L_{eps, eps/2})/eps stable across halvings
    KernelSpec spec = matern_kernel(2.0, 1);
    double prev = 0.0;
    for (double eps : {0.1, 0.05, 0.025}) {
        TorusKernel L = intermediate_kernel(spec, eps, 0.5 * eps, g);
        double r = first_moment(L) / eps;
        if (prev > 0.0) CHECK(r / prev == doctest::Approx(1.0).epsilon(0.5));
        prev = r;
    }
}

TEST_CASE("second moment scales as eps^2") {
    PeriodicGrid g(1, 4096);
    KernelSpec spec = matern_kernel(2.0, 1);
    double m_prev = 0.0;
    for (double eps : {0.08, 0.04, 0.02}) {
        double m2 = second_moment(realize_on_torus(spec, eps, g));
        if (m_prev > 0.0) {
            double ratio = m_prev / m2;
            CHECK(ratio >= 3.8);
            CHECK(ratio <= 4.2);
        }
        m_prev = m2;
    }
    // analytic value: int x^2 R dx = 1/pi^2, scaled by eps^2
    double m2 = second_moment(realize_on_torus(spec, 0.02, g));
    CHECK(m2 == doctest::Approx(0.02 * 0.02 / (kPi * kPi)).epsilon(1e-3));
}

TEST_CASE("admissibility: matern passes, gaussian fails the envelope") {
    PeriodicGrid g(1, 2048);
    AdmissibilityReport rep = validate_admissibility(
        matern_kernel(2.0, 1), g, {0.1, 0.05, 0.025}, 1.2, 8, 7);
    CHECK(rep.all_passed());
    CHECK(rep.k == 2.0);
    CHECK(rep.smoothness_2k_gt_dp2);

    AdmissibilityReport lap = validate_admissibility(
        laplace_kernel_1d(), g, {0.1, 0.05}, 1.2, 8, 7);
    CHECK(lap.property[2].passed);
    CHECK_FALSE(lap.smoothness_2k_gt_dp2);  // 2k = 2 <= d+2 = 3, flagged

    KernelSpec gauss = custom_spectral_kernel(
        [](double r) { return std::exp(-r * r); }, 1, 2.0, "gaussian");
    AdmissibilityReport grep = validate_admissibility(gauss, g, {0.1}, 1.2, 4, 7);
    CHECK_FALSE(grep.property[2].passed);
    CHECK_FALSE(grep.all_passed());

    CHECK(rep.to_json().find("all_passed") != std::string::npos);
}
