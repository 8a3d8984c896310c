#ifdef PME_HAVE_AVX2

#include "pme/simd_ops.hpp"

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace pme::simd {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    return std::max(_mm_cvtsd_f64(lo), _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo)));
}

inline double hmin(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_min_pd(lo, hi);
    return std::min(_mm_cvtsd_f64(lo), _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo)));
}

// Lane-wise Kahan accumulation, matching the scalar table's compensation.
struct VAcc {
    __m256d s = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();
    inline void add(__m256d v) {
        __m256d y = _mm256_sub_pd(v, c);
        __m256d t = _mm256_add_pd(s, y);
        c = _mm256_sub_pd(_mm256_sub_pd(t, s), y);
        s = t;
    }
    double value() const { return hsum(_mm256_sub_pd(s, c)); }
};

double sum_(const double* x, std::size_t n) {
    VAcc a;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) a.add(_mm256_loadu_pd(x + i));
    double s = a.value();
    for (; i < n; ++i) s += x[i];
    return s;
}

double sumsq_(const double* x, std::size_t n) {
    VAcc a;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        a.add(_mm256_mul_pd(v, v));
    }
    double s = a.value();
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

double dot_(const double* x, const double* y, std::size_t n) {
    VAcc a;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        a.add(_mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    double s = a.value();
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double max_abs_(const double* x, std::size_t n) {
    const __m256d absmask =
        _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d m = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        m = _mm256_max_pd(m, _mm256_and_pd(absmask, _mm256_loadu_pd(x + i)));
    double r = hmax(m);
    for (; i < n; ++i) r = std::max(r, std::abs(x[i]));
    return r;
}

double min_val_(const double* x, std::size_t n) {
    __m256d m = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) m = _mm256_min_pd(m, _mm256_loadu_pd(x + i));
    double r = hmin(m);
    for (; i < n; ++i) r = std::min(r, x[i]);
    return r;
}

void axpy_(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                    _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_(double* x, double a, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void clamp_min_(double* x, double lo, std::size_t n) {
    __m256d vlo = _mm256_set1_pd(lo);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_max_pd(vlo, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] = std::max(x[i], lo);
}

void mul_(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void cmul_(const double* x, const double* y, double* out, std::size_t ncplx) {
    // two complex numbers per 256-bit lane: [r0 i0 r1 i1]
    std::size_t i = 0;
    for (; i + 2 <= ncplx; i += 2) {
        __m256d a = _mm256_loadu_pd(x + 2 * i);
        __m256d b = _mm256_loadu_pd(y + 2 * i);
        __m256d br = _mm256_movedup_pd(b);                    // [br0 br0 br1 br1]
        __m256d bi = _mm256_unpackhi_pd(b, b);                // [bi0 bi0 bi1 bi1]
        __m256d aswap = _mm256_permute_pd(a, 0x5);            // [i0 r0 i1 r1]
        __m256d t = _mm256_mul_pd(aswap, bi);                 // [ai*bi ar*bi ...]
        __m256d r = _mm256_fmaddsub_pd(a, br, t);             // [ar*br-ai*bi, ai*br+ar*bi]
        _mm256_storeu_pd(out + 2 * i, r);
    }
    for (; i < ncplx; ++i) {
        double xr = x[2 * i], xi = x[2 * i + 1];
        double yr = y[2 * i], yi = y[2 * i + 1];
        out[2 * i] = xr * yr - xi * yi;
        out[2 * i + 1] = xr * yi + xi * yr;
    }
}

void rscale_cplx_(double* z, const double* m, std::size_t ncplx) {
    std::size_t i = 0;
    for (; i + 2 <= ncplx; i += 2) {
        __m128d mm = _mm_loadu_pd(m + i);
        __m256d mv = _mm256_permute4x64_pd(_mm256_castpd128_pd256(mm), 0x50);
        _mm256_storeu_pd(z + 2 * i,
                         _mm256_mul_pd(mv, _mm256_loadu_pd(z + 2 * i)));
    }
    for (; i < ncplx; ++i) {
        z[2 * i] *= m[i];
        z[2 * i + 1] *= m[i];
    }
}

void upwind_flux_(const double* u, const double* vface, std::size_t n,
                  double* flux) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(vface + i);
        __m256d ul = _mm256_loadu_pd(u + i);
        __m256d ur = _mm256_loadu_pd(u + i + 1);
        __m256d donor =
            _mm256_blendv_pd(ul, ur, _mm256_cmp_pd(v, zero, _CMP_LT_OQ));
        _mm256_storeu_pd(flux + i, _mm256_mul_pd(v, donor));
    }
    for (; i < n; ++i) {
        double v = vface[i];
        flux[i] = v >= 0.0 ? v * u[i] : v * u[i + 1];
    }
}

void add_compensated_(double* u, double* comp, const double* delta,
                      std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d uu = _mm256_loadu_pd(u + i);
        __m256d y = _mm256_add_pd(_mm256_loadu_pd(delta + i),
                                  _mm256_loadu_pd(comp + i));
        __m256d t = _mm256_add_pd(uu, y);
        _mm256_storeu_pd(comp + i, _mm256_add_pd(_mm256_sub_pd(uu, t), y));
        _mm256_storeu_pd(u + i, t);
    }
    for (; i < n; ++i) {
        double y = delta[i] + comp[i];
        double t = u[i] + y;
        comp[i] = (u[i] - t) + y;
        u[i] = t;
    }
}

// Vector exp, Cephes-style rational approximation. Max observed relative
// error ~2 ulp over the clamped range; -inf maps to 0 through the clamp.
inline __m256d exp_pd(__m256d x) {
    const __m256d hi = _mm256_set1_pd(708.0);
    const __m256d lo = _mm256_set1_pd(-708.0);
    x = _mm256_min_pd(hi, _mm256_max_pd(lo, x));

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

    __m256d t = _mm256_fmadd_pd(x, log2e, _mm256_set1_pd(0.5));
    __m256d nflt = _mm256_floor_pd(t);
    x = _mm256_fnmadd_pd(nflt, c1, x);
    x = _mm256_fnmadd_pd(nflt, c2, x);

    __m256d xx = _mm256_mul_pd(x, x);
    __m256d px = _mm256_set1_pd(1.26177193074810590878e-4);
    px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(3.02994407707441961300e-2));
    px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(9.99999999999999999910e-1));
    px = _mm256_mul_pd(px, x);
    __m256d qx = _mm256_set1_pd(3.00198505138664455042e-6);
    qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.52448340349684104192e-3));
    qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.27265548208155028766e-1));
    qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.00000000000000000005e0));
    __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));

    // scale by 2^n via the exponent field
    __m128i ni = _mm256_cvtpd_epi32(nflt);
    __m256i n64 = _mm256_cvtepi32_epi64(ni);
    __m256i pow2 =
        _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(r, _mm256_castsi256_pd(pow2));
}

void band_lse_(const double* xpad, std::size_t n, const double* w,
               std::size_t w_len, double* out) {
    const __m256d ninf =
        _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d m = ninf;
        for (std::size_t j = 0; j < w_len; ++j) {
            __m256d v = _mm256_add_pd(_mm256_loadu_pd(xpad + i + j),
                                      _mm256_set1_pd(w[j]));
            m = _mm256_max_pd(m, v);
        }
        // a fully -inf window stays -inf: exp(-inf - -inf) would be NaN,
        // so substitute 0 for the max in that case and fix up after.
        __m256d bad = _mm256_cmp_pd(m, ninf, _CMP_EQ_OQ);
        __m256d msafe = _mm256_blendv_pd(m, _mm256_setzero_pd(), bad);
        __m256d s = _mm256_setzero_pd();
        for (std::size_t j = 0; j < w_len; ++j) {
            __m256d v = _mm256_add_pd(_mm256_loadu_pd(xpad + i + j),
                                      _mm256_set1_pd(w[j]));
            s = _mm256_add_pd(s, exp_pd(_mm256_sub_pd(v, msafe)));
        }
        double sv[4], mv[4], bv[4];
        _mm256_storeu_pd(sv, s);
        _mm256_storeu_pd(mv, m);
        _mm256_storeu_pd(bv, bad);
        for (int k = 0; k < 4; ++k)
            out[i + k] = bv[k] != 0.0 ? mv[k] : mv[k] + std::log(sv[k]);
    }
    if (i < n) scalar_ops().band_lse(xpad + i, n - i, w, w_len, out + i);
}

const Ops table = {
    "avx2",      sum_,  sumsq_,       dot_,         max_abs_,     min_val_,
    axpy_,       scale_, clamp_min_,  mul_,         cmul_,        rscale_cplx_,
    upwind_flux_, add_compensated_,   band_lse_,
};

}  // namespace

const Ops* avx2_ops() { return &table; }

}  // namespace pme::simd

#else

#include "pme/simd_ops.hpp"

namespace pme::simd {
const Ops* avx2_ops() { return nullptr; }
}

#endif
