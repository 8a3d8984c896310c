#pragma once

#include <cstddef>

namespace pme::simd {

// Table of data-parallel inner-loop kernels. Every entry has a scalar
// reference implementation and (on x86-64) an AVX2 variant selected at
// runtime; the two are equivalence-tested against each other.
struct Ops {
    const char* name;

    // compensated reductions
    double (*sum)(const double* x, std::size_t n);
    double (*sumsq)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*max_abs)(const double* x, std::size_t n);
    double (*min_val)(const double* x, std::size_t n);

    // elementwise
    void (*axpy)(double a, const double* x, double* y, std::size_t n);   // y += a*x
    void (*scale)(double* x, double a, std::size_t n);
    void (*clamp_min)(double* x, double lo, std::size_t n);
    void (*mul)(const double* x, const double* y, double* out, std::size_t n);

    // complex interleaved [re,im,...]: out = x * y (pointwise complex product)
    void (*cmul)(const double* x, const double* y, double* out, std::size_t ncplx);
    // complex interleaved scaled by a real multiplier per entry
    void (*rscale_cplx)(double* z, const double* m, std::size_t ncplx);

    // donor-cell flux for one periodic line: u has n+1 entries (u[n] = u[0]),
    // vface[i] is the velocity at face i+1/2; flux[i] = v>=0 ? v*u[i] : v*u[i+1]
    void (*upwind_flux)(const double* u, const double* vface, std::size_t n,
                        double* flux);

    // per-cell Kahan-compensated state update: u += delta (comp carries the
    // running floating-point remainder)
    void (*add_compensated)(double* u, double* comp, const double* delta,
                            std::size_t n);

    // banded log-sum-exp sweep (Sinkhorn axis kernel):
    // out[i] = log sum_{j=0..w_len-1} exp(xpad[i+j] + w[j]), xpad has
    // n + w_len - 1 entries. -inf entries are legal.
    void (*band_lse)(const double* xpad, std::size_t n, const double* w,
                     std::size_t w_len, double* out);
};

const Ops& scalar_ops();
const Ops* avx2_ops();   // nullptr when unavailable

// Active table: AVX2 when the CPU has it, unless PME_SIMD=scalar in the
// environment. PME_SIMD=avx2 forces AVX2 (falls back if unsupported).
const Ops& ops();

}  // namespace pme::simd
