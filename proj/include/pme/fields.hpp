#pragma once

#include <string>

#include "pme/common.hpp"
#include "pme/grid.hpp"

namespace pme {

// Shared random/analytic field builders used by the validators, the
// diagnostics trials and the experiment harness.

// strictly positive density from a handful of low-frequency modes
GridField smooth_random_density(const PeriodicGrid& grid, Rng& rng,
                                int max_mode = 4, double amplitude = 0.4);

// iid normal cell values (mean zero); rough trial field
GridField white_noise_field(const PeriodicGrid& grid, Rng& rng);

// spectral derivative of white noise along axis 0; emulates H^-1 data
GridField noise_derivative_field(const PeriodicGrid& grid, Rng& rng);

// nonnegative random field (clipped noise around 1), normalized to mass 1
GridField nonneg_random_density(const PeriodicGrid& grid, Rng& rng);

// named initial conditions: "uniform", "sine" (1 + a sin(2 pi x)),
// "sineproduct" (1 + a prod_d sin(2 pi x_a)), "bump"
GridField initial_condition(const std::string& name, double amplitude,
                            const PeriodicGrid& grid);

}  // namespace pme
