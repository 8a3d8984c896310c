#include "pme/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <mutex>

#include "pme/common.hpp"
#include "pme/simd_ops.hpp"

namespace pme {

PeriodicGrid::PeriodicGrid(int dim_, int n_) : dim(dim_), n(n_), h(1.0 / n_) {
    require(dim >= 1 && dim <= 3, "PeriodicGrid: dim must be 1, 2 or 3");
    require(n >= 1, "PeriodicGrid: n must be positive");
}

GridField::GridField(const PeriodicGrid& g, FieldKind k)
    : grid(g), kind(k), values(g.cell_count(), 0.0) {}

GridField GridField::constant(const PeriodicGrid& g, double v, FieldKind k) {
    GridField f(g, k);
    std::fill(f.values.begin(), f.values.end(), v);
    return f;
}

namespace {

// FFTW plan creation is not thread safe; execution on distinct arrays is.
// Plans are cached per (dim, n, sign) and reused via the new-array API.
std::mutex plan_mutex;

fftw_plan get_plan(int dim, int n, int sign) {
    static std::map<std::tuple<int, int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_tuple(dim, n, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<fftw_complex> dummy(static_cast<std::size_t>(std::pow(n, dim)));
    int dims[3] = {n, n, n};
    fftw_plan p = fftw_plan_dft(dim, dims, dummy.data(), dummy.data(), sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache[key] = p;
    return p;
}

void run_fft(int dim, int n, int sign, std::complex<double>* data) {
    fftw_plan p = get_plan(dim, n, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                     reinterpret_cast<fftw_complex*>(data));
}

double cell_measure(const PeriodicGrid& g) {
    double m = 1.0;
    for (int a = 0; a < g.dim; ++a) m *= g.h;
    return m;
}

}  // namespace

SpectralCoefficients forward_transform(const GridField& f) {
    SpectralCoefficients s;
    s.grid = f.grid;
    s.coeff.assign(f.values.begin(), f.values.end());
    run_fft(f.grid.dim, f.grid.n, FFTW_FORWARD, s.coeff.data());
    const double hd = cell_measure(f.grid);
    simd::ops().scale(reinterpret_cast<double*>(s.coeff.data()), hd,
                      2 * s.coeff.size());
    return s;
}

GridField inverse_transform(const SpectralCoefficients& s, FieldKind kind) {
    std::vector<std::complex<double>> buf = s.coeff;
    run_fft(s.grid.dim, s.grid.n, FFTW_BACKWARD, buf.data());
    GridField f(s.grid, kind);
    for (std::size_t i = 0; i < buf.size(); ++i) f.values[i] = buf[i].real();
    return f;
}

GridField convolve_periodic(const GridField& f, const GridField& g) {
    require(f.grid == g.grid, "convolve_periodic: grid mismatch");
    SpectralCoefficients fs = forward_transform(f);
    SpectralCoefficients gs = forward_transform(g);
    simd::ops().cmul(reinterpret_cast<const double*>(fs.coeff.data()),
                     reinterpret_cast<const double*>(gs.coeff.data()),
                     reinterpret_cast<double*>(fs.coeff.data()),
                     fs.coeff.size());
    return inverse_transform(fs);
}

void derivative_coeffs(SpectralCoefficients& s, int axis) {
    const int n = s.grid.n;
    const int dim = s.grid.dim;
    std::size_t stride = 1;
    for (int a = dim - 1; a > axis; --a) stride *= n;
    for (std::size_t i = 0; i < s.coeff.size(); ++i) {
        int k = static_cast<int>((i / stride) % n);
        if (is_nyquist(k, n)) {
            s.coeff[i] = 0.0;
            continue;
        }
        double w = kTwoPi * freq_of_index(k, n);
        s.coeff[i] *= std::complex<double>(0.0, w);
    }
}

void phase_shift_coeffs(SpectralCoefficients& s, int axis, double delta) {
    const int n = s.grid.n;
    const int dim = s.grid.dim;
    std::size_t stride = 1;
    for (int a = dim - 1; a > axis; --a) stride *= n;
    for (std::size_t i = 0; i < s.coeff.size(); ++i) {
        int k = static_cast<int>((i / stride) % n);
        if (is_nyquist(k, n)) {
            // only the cosine part of the Nyquist mode is representable
            s.coeff[i] *= std::cos(kTwoPi * (n / 2) * delta);
            continue;
        }
        double w = kTwoPi * freq_of_index(k, n) * delta;
        s.coeff[i] *= std::complex<double>(std::cos(w), std::sin(w));
    }
}

std::vector<GridField> gradient_spectral(const GridField& f) {
    SpectralCoefficients base = forward_transform(f);
    std::vector<GridField> out;
    out.reserve(f.grid.dim);
    for (int a = 0; a < f.grid.dim; ++a) {
        SpectralCoefficients s = base;
        derivative_coeffs(s, a);
        out.push_back(inverse_transform(s));
    }
    return out;
}

double mass(const GridField& f) {
    return cell_measure(f.grid) *
           simd::ops().sum(f.values.data(), f.values.size());
}

GridField normalize_density(const GridField& f, double neg_tol) {
    double lo = simd::ops().min_val(f.values.data(), f.values.size());
    require(lo >= -neg_tol, "normalize_density: negative values beyond tolerance");
    GridField out = f;
    out.kind = FieldKind::density;
    simd::ops().clamp_min(out.values.data(), 0.0, out.values.size());
    double m = mass(out);
    require(m > 0.0, "normalize_density: nonpositive mass");
    simd::ops().scale(out.values.data(), 1.0 / m, out.values.size());
    return out;
}

double lp_norm(const GridField& f, double p) {
    require(p >= 1.0, "lp_norm: p must be >= 1");
    if (std::isinf(p))
        return simd::ops().max_abs(f.values.data(), f.values.size());
    const double hd = cell_measure(f.grid);
    if (p == 2.0)
        return std::sqrt(hd * simd::ops().sumsq(f.values.data(), f.values.size()));
    double s = 0.0;
    for (double v : f.values) s += std::pow(std::abs(v), p);
    return std::pow(hd * s, 1.0 / p);
}

double l2_norm_sq(const GridField& f) {
    return cell_measure(f.grid) *
           simd::ops().sumsq(f.values.data(), f.values.size());
}

double sample_at(const GridField& f, const double* x) {
    const int n = f.grid.n;
    const int dim = f.grid.dim;
    int base[3] = {0, 0, 0};
    double w[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
        double t = wrap_unit(x[a]) * n;
        int i = static_cast<int>(std::floor(t));
        if (i >= n) i = n - 1;
        base[a] = i;
        w[a] = t - i;
    }
    double acc = 0.0;
    const int corners = 1 << dim;
    for (int c = 0; c < corners; ++c) {
        double weight = 1.0;
        std::size_t idx = 0;
        for (int a = 0; a < dim; ++a) {
            int bit = (c >> a) & 1;
            int ia = base[a] + bit;
            if (ia >= n) ia -= n;
            weight *= bit ? w[a] : 1.0 - w[a];
            idx = idx * n + ia;
        }
        acc += weight * f.values[idx];
    }
    return acc;
}

GridField apply_multipliers(const GridField& f, const std::vector<double>& mult,
                            FieldKind kind) {
    require(mult.size() == f.values.size(), "apply_multipliers: size mismatch");
    SpectralCoefficients s = forward_transform(f);
    simd::ops().rscale_cplx(reinterpret_cast<double*>(s.coeff.data()),
                            mult.data(), s.coeff.size());
    return inverse_transform(s, kind);
}

GridField resample_spectral(const GridField& f, int new_n) {
    const int n = f.grid.n;
    if (new_n == n) return f;
    SpectralCoefficients s = forward_transform(f);
    PeriodicGrid g2(f.grid.dim, new_n);
    SpectralCoefficients t;
    t.grid = g2;
    t.coeff.assign(g2.cell_count(), 0.0);
    const int dim = f.grid.dim;
    const int keep = std::min(n, new_n);
    // copy every source frequency representable on both grids
    std::size_t count = s.coeff.size();
    for (std::size_t i = 0; i < count; ++i) {
        int idx[3];
        std::size_t rem = i;
        for (int a = dim - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % n);
            rem /= n;
        }
        bool ok = true;
        std::size_t j = 0;
        for (int a = 0; a < dim; ++a) {
            int m = freq_of_index(idx[a], n);
            if (is_nyquist(idx[a], n) || m < -keep / 2 || m > (keep - 1) / 2 ||
                (new_n % 2 == 0 && m == -new_n / 2)) {
                ok = false;
                break;
            }
            int k2 = m >= 0 ? m : m + new_n;
            j = j * new_n + k2;
        }
        if (ok) t.coeff[j] = s.coeff[i];
    }
    return inverse_transform(t, f.kind);
}

}  // namespace pme
