#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pme/grid.hpp"

namespace pme {

// Analytic kernel defined by its radial spectral profile r -> R_hat(|xi|),
// normalized so R_hat(0) = 1. Envelope constants (alpha, a, b, k) describe
// the positivity/decay sandwich 1/alpha <= R_hat <= 1 on |xi| <= 1 and
// a |xi|^-2k <= R_hat <= b |xi|^-k beyond.
struct KernelSpec {
    enum class Family { matern, laplace1d, custom };
    Family family = Family::custom;
    int dim = 1;
    double s = 0.0;  // matern exponent
    std::function<double(double)> profile;
    double alpha = 0.0, a = 0.0, b = 0.0, k = 0.0;
    bool has_envelope = false;
    std::string name;
};

// profile (1 + |xi|^2)^-s; envelope holds with k = s, a = 2^-s, b = 1,
// alpha = 2^s
KernelSpec matern_kernel(double s, int dim);

// R(x) = (1/2) e^{-|x|}, profile 1/(1 + 4 pi^2 xi^2); convex away from the
// origin, the 1D rate-1/2 hypothesis
KernelSpec laplace_kernel_1d();

KernelSpec custom_spectral_kernel(std::function<double(double)> profile,
                                  int dim, double claimed_k,
                                  std::string name = "custom");

// Periodization at scale epsilon: multiplier R_hat(eps*m) per lattice
// frequency m, spatial field = inverse transform of the multipliers.
struct TorusKernel {
    KernelSpec spec;
    double epsilon = 0.0;
    PeriodicGrid grid;
    std::vector<double> multipliers;  // real, coeff layout
    GridField spatial;
    bool resolution_warning = false;  // epsilon < 4h
};

TorusKernel realize_on_torus(const KernelSpec& spec, double epsilon,
                             const PeriodicGrid& grid);
TorusKernel sqrt_kernel(const TorusKernel& K);
TorusKernel intermediate_kernel(const KernelSpec& spec, double epsilon,
                                double eta, const PeriodicGrid& grid);

double first_moment(const TorusKernel& K);   // h^d sum d_T(x,0) |K(x)|
double second_moment(const TorusKernel& K);  // h^d sum d_T(x,0)^2 |K(x)|

// convolution by multiplier product (one forward/backward pair)
GridField kernel_convolve(const TorusKernel& K, const GridField& f);
std::vector<GridField> kernel_gradient_fields(const TorusKernel& K);

// closed forms for the Laplace family, used by the direct particle sum
double laplace_density(double x, double epsilon);
double laplace_density_grad(double x, double epsilon);
// lattice-sum periodization, shifts |m| <= 8
double laplace_torus_grad(double x, double epsilon);

struct PropertyCheck {
    bool passed = false;
    double measured = 0.0;
    double bound = 0.0;
    std::string note;
};

struct AdmissibilityReport {
    std::string kernel_name;
    int dim = 1;
    double k = 0.0;
    double alpha_hat = 0.0, a_hat = 0.0, b_hat = 0.0;
    double second_moment = 0.0;
    double sqrt_gradient_ratio = 0.0;        // Lemma-3.3-style constant
    double intermediate_moment_ratio = 0.0;  // sup_eps of moment(L)/eps
    bool smoothness_2k_gt_dp2 = false;
    std::array<PropertyCheck, 5> property;  // i..v
    std::vector<double> eps_list;

    bool all_passed() const;
    std::string to_json() const;
};

// Checks, over the resolvable frequency range and the given eps ladder:
// (i) spatial non-negativity + finite second moment, (ii) unit mass,
// (iii) the spectral envelope, (iv) the square-root gradient ratio
// stability, (v) the intermediate-kernel first-moment ratio stability,
// with eta = eps^gamma. Failures are recorded, not thrown.
AdmissibilityReport validate_admissibility(const KernelSpec& spec,
                                           const PeriodicGrid& grid,
                                           const std::vector<double>& eps_list,
                                           double gamma = 1.2, int trials = 20,
                                           std::uint64_t seed = 1234);

// Reusable Lemma-3.3 evaluator: ratio(f) = eps * || |grad R^1/2| * f ||_2
// / || R^1/2 * f ||_2 for nonnegative f.
struct SqrtGradOperator {
    double epsilon;
    std::vector<double> half_mult;
    GridField abs_grad_half;
    PeriodicGrid grid;

    explicit SqrtGradOperator(const TorusKernel& K);
    double ratio(const GridField& f) const;
};

}  // namespace pme
