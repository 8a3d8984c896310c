#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pme/diagnostics.hpp"
#include "pme/dynamics.hpp"
#include "pme/kernels.hpp"
#include "pme/transport.hpp"

namespace pme {

struct ExperimentConfig {
    enum class Kind {
        rate1d,
        rateGeneralD,
        energyDecay,
        kernelValidation,
        particleConsistency,
        commutator1d,
    };
    Kind experiment = Kind::rate1d;
    int dimension = 1;
    int n = 4096;
    std::string kernel_family = "laplace1d";
    double kernel_s = 2.0;
    std::vector<double> epsilons;
    double gamma = 1.2;  // eta = eps^gamma where an intermediate scale is used
    double horizon = 0.5;
    std::string initial = "sine";
    double amplitude = 0.5;
    std::string output_dir = "out";
    std::uint64_t seed = 42;
    int snapshots = 11;
    double cfl = 0.5;
    int trials = 20;
    int pme_grid_cap = 1024;  // explicit reference scheme cap (h^2 step rule)
    SinkhornParams sinkhorn;
    std::size_t particles = 100000;

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    std::string to_json() const;

    KernelSpec make_kernel() const;
    void validate() const;
};

struct EpsilonRun {
    double epsilon = 0.0;
    double distance = 0.0;  // sup over snapshots
    double l2_error = 0.0;  // Corollary-style space-time L2
    std::string method;
    long iterations = 0;
    bool energy_ok = true, entropy_ok = true;
    double energy_slack = 0.0, entropy_slack = 0.0;
    double g_max = 0.0;       // 1D: max G over snapshots
    double c_over_eps = 0.0;  // 1D: max |C|/eps
    std::vector<double> snapshot_times;
    std::vector<double> w2_series;
    CommutatorLedger1D commutator;
    EnergyLedger energy;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// OLS on (log eps, log distance); nonpositive rows are dropped, fewer than
// three surviving rows is an error
RateFit fit_rate(const std::vector<std::array<double, 2>>& rows);

struct RateReport {
    ExperimentConfig config;
    std::vector<EpsilonRun> runs;
    std::optional<RateFit> fit;
    std::optional<RateFit> l2_fit;
    double target_rate = 0.0;     // theoretical exponent
    double pass_threshold = 0.0;  // acceptance slope floor
    bool distances_decreasing = false;
    bool pass = false;
    std::string flag;  // "identical solutions", "need >= 3 points", ...
    std::optional<AdmissibilityReport> kernel_report;

    std::string summary_json() const;
};

RateReport run_experiment(const ExperimentConfig& cfg);

// rows.csv, summary.json and a log-log plot.svg (markers + fitted line +
// theoretical guide line)
void emit_report(const RateReport& report, const std::string& dir);

std::vector<std::array<double, 2>> read_rows_csv(const std::string& path);

}  // namespace pme
