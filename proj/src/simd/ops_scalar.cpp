#include "pme/simd_ops.hpp"

#include <cmath>
#include <limits>

namespace pme::simd {
namespace {

// Neumaier-compensated accumulation keeps the reductions well below the
// 1e-12 tolerances the solvers are tested at, independent of array length.
struct Acc {
    double s = 0.0, c = 0.0;
    void add(double v) {
        double t = s + v;
        if (std::abs(s) >= std::abs(v))
            c += (s - t) + v;
        else
            c += (v - t) + s;
        s = t;
    }
    double value() const { return s + c; }
};

double sum_(const double* x, std::size_t n) {
    Acc a;
    for (std::size_t i = 0; i < n; ++i) a.add(x[i]);
    return a.value();
}

double sumsq_(const double* x, std::size_t n) {
    Acc a;
    for (std::size_t i = 0; i < n; ++i) a.add(x[i] * x[i]);
    return a.value();
}

double dot_(const double* x, const double* y, std::size_t n) {
    Acc a;
    for (std::size_t i = 0; i < n; ++i) a.add(x[i] * y[i]);
    return a.value();
}

double max_abs_(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

double min_val_(const double* x, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::min(m, x[i]);
    return m;
}

void axpy_(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_(double* x, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void clamp_min_(double* x, double lo, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::max(x[i], lo);
}

void mul_(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void cmul_(const double* x, const double* y, double* out, std::size_t ncplx) {
    for (std::size_t i = 0; i < ncplx; ++i) {
        double xr = x[2 * i], xi = x[2 * i + 1];
        double yr = y[2 * i], yi = y[2 * i + 1];
        out[2 * i] = xr * yr - xi * yi;
        out[2 * i + 1] = xr * yi + xi * yr;
    }
}

void rscale_cplx_(double* z, const double* m, std::size_t ncplx) {
    for (std::size_t i = 0; i < ncplx; ++i) {
        z[2 * i] *= m[i];
        z[2 * i + 1] *= m[i];
    }
}

void upwind_flux_(const double* u, const double* vface, std::size_t n,
                  double* flux) {
    for (std::size_t i = 0; i < n; ++i) {
        double v = vface[i];
        flux[i] = v >= 0.0 ? v * u[i] : v * u[i + 1];
    }
}

void add_compensated_(double* u, double* comp, const double* delta,
                      std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double y = delta[i] + comp[i];
        double t = u[i] + y;
        comp[i] = (u[i] - t) + y;
        u[i] = t;
    }
}

void band_lse_(const double* xpad, std::size_t n, const double* w,
               std::size_t w_len, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < w_len; ++j)
            m = std::max(m, xpad[i + j] + w[j]);
        if (!std::isfinite(m)) {
            out[i] = m;
            continue;
        }
        double s = 0.0;
        for (std::size_t j = 0; j < w_len; ++j)
            s += std::exp(xpad[i + j] + w[j] - m);
        out[i] = m + std::log(s);
    }
}

const Ops table = {
    "scalar",    sum_,  sumsq_,       dot_,         max_abs_,     min_val_,
    axpy_,       scale_, clamp_min_,  mul_,         cmul_,        rscale_cplx_,
    upwind_flux_, add_compensated_,   band_lse_,
};

}  // namespace

const Ops& scalar_ops() { return table; }

}  // namespace pme::simd
