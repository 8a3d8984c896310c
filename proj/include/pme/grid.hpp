#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace pme {

// Uniform periodic lattice on [0,1)^d. Nodes sit at x_j = j*h and are read
// as cell centers of cells [x_j - h/2, x_j + h/2).
struct PeriodicGrid {
    int dim = 1;
    int n = 1;
    double h = 1.0;

    PeriodicGrid() = default;
    PeriodicGrid(int dim_, int n_);

    std::size_t cell_count() const {
        std::size_t c = 1;
        for (int a = 0; a < dim; ++a) c *= static_cast<std::size_t>(n);
        return c;
    }
    bool operator==(const PeriodicGrid& o) const {
        return dim == o.dim && n == o.n;
    }
};

enum class FieldKind { density, scalar, velocity };

struct GridField {
    PeriodicGrid grid;
    FieldKind kind = FieldKind::scalar;
    std::vector<double> values;  // row-major, axis 0 slowest

    GridField() = default;
    GridField(const PeriodicGrid& g, FieldKind k);
    static GridField constant(const PeriodicGrid& g, double v,
                              FieldKind k = FieldKind::scalar);
};

struct SpectralCoefficients {
    PeriodicGrid grid;
    std::vector<std::complex<double>> coeff;  // same layout as GridField
};

// index k in [0,n) -> signed lattice frequency in {-n/2, ..., n/2-1}
inline int freq_of_index(int k, int n) { return 2 * k < n ? k : k - n; }
inline bool is_nyquist(int k, int n) { return n % 2 == 0 && 2 * k == n; }

// Coefficients follow f_hat(m) = int f(x) e^{-2 pi i m.x} dx discretized by
// the nodal rectangle rule, so coeff at frequency 0 equals the mass.
SpectralCoefficients forward_transform(const GridField& f);
GridField inverse_transform(const SpectralCoefficients& s,
                            FieldKind kind = FieldKind::scalar);

GridField convolve_periodic(const GridField& f, const GridField& g);
std::vector<GridField> gradient_spectral(const GridField& f);

double mass(const GridField& f);
GridField normalize_density(const GridField& f, double neg_tol = 1e-12);
double lp_norm(const GridField& f, double p);  // p >= 1, or infinity
double sample_at(const GridField& f, const double* x);  // multilinear, periodic

// in-place spectral helpers
void derivative_coeffs(SpectralCoefficients& s, int axis);
void phase_shift_coeffs(SpectralCoefficients& s, int axis, double delta);

// fast path: inverse(forward(f) * mult), mult indexed like coeff
GridField apply_multipliers(const GridField& f, const std::vector<double>& mult,
                            FieldKind kind = FieldKind::scalar);

// trigonometric resampling to a finer/coarser resolution (smooth fields)
GridField resample_spectral(const GridField& f, int new_n);

double l2_norm_sq(const GridField& f);  // h^d * sum v^2

}  // namespace pme
