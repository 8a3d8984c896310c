#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "pme/field_io.hpp"
#include "pme/fields.hpp"
#include "pme/harness.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_trajectory(const pme::Trajectory& traj, const std::string& dir,
                      const std::string& prefix) {
    fs::create_directories(dir);
    json manifest;
    manifest["times"] = traj.times;
    json files = json::array();
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        std::string name = prefix + "_" + std::to_string(k) + ".field";
        pme::write_field(traj.snapshots[k], (fs::path(dir) / name).string());
        files.push_back(name);
    }
    manifest["files"] = files;
    json diags = json::array();
    for (const pme::StepDiag& d : traj.diagnostics)
        diags.push_back({{"t", d.time},
                         {"dt", d.dt},
                         {"mass", d.mass},
                         {"max_velocity", d.max_velocity}});
    manifest["diagnostics"] = diags;
    std::ofstream out(fs::path(dir) / (prefix + "_manifest.json"));
    out << manifest.dump(2) << "\n";
}

pme::SolverConfig solver_config(const pme::ExperimentConfig& cfg) {
    pme::SolverConfig s;
    s.horizon = cfg.horizon;
    s.cfl_factor = cfg.cfl;
    for (int i = 0; i < cfg.snapshots; ++i)
        s.snapshot_times.push_back(cfg.horizon * i / (cfg.snapshots - 1));
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusion-velocity particle laboratory for the porous "
                 "medium equation on the torus"};
    app.require_subcommand(1);

    std::string config_path, field_a, field_b, out_json;
    std::string family = "matern";
    double s_param = 2.0, gamma = 1.2, reg = 5e-4;
    int dim = 1, n = 1024, trials = 20;
    std::vector<double> eps_list = {0.1, 0.05, 0.025};
    std::string method = "auto";

    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "JSON experiment config")->required();

    CLI::App* vk = app.add_subcommand("validate-kernel",
                                      "kernel admissibility checks");
    vk->add_option("--family", family, "matern|laplace1d");
    vk->add_option("--s", s_param, "matern exponent");
    vk->add_option("--dim", dim, "dimension");
    vk->add_option("--n", n, "grid cells per dimension");
    vk->add_option("--eps", eps_list, "epsilon ladder (descending)");
    vk->add_option("--gamma", gamma, "eta = eps^gamma");
    vk->add_option("--trials", trials, "random trial fields");
    vk->add_option("--json", out_json, "write the JSON report here");

    CLI::App* w2 = app.add_subcommand("w2", "distance between two field files");
    w2->add_option("a", field_a, "first field")->required();
    w2->add_option("b", field_b, "second field")->required();
    w2->add_option("--method", method, "auto|quantile|sinkhorn");
    w2->add_option("--reg", reg, "sinkhorn target regularization");
    w2->add_option("--json", out_json, "write the JSON result here");

    CLI::App* ra = app.add_subcommand("run-aggregation",
                                      "aggregation equation solver");
    ra->add_option("config", config_path, "JSON config")->required();
    CLI::App* rp = app.add_subcommand("run-pme", "porous medium reference solver");
    rp->add_option("config", config_path, "JSON config")->required();
    CLI::App* rr = app.add_subcommand("run-particles", "particle ODE system");
    rr->add_option("config", config_path, "JSON config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            pme::ExperimentConfig cfg =
                pme::ExperimentConfig::from_json_file(config_path);
            pme::RateReport rep = pme::run_experiment(cfg);
            std::cout << rep.summary_json() << "\n";
            return rep.pass ? 0 : 1;
        }
        if (vk->parsed()) {
            pme::KernelSpec spec = family == "laplace1d"
                                       ? pme::laplace_kernel_1d()
                                       : pme::matern_kernel(s_param, dim);
            pme::PeriodicGrid grid(dim, n);
            pme::AdmissibilityReport rep = pme::validate_admissibility(
                spec, grid, eps_list, gamma, trials);
            const char* names[5] = {"i   nonneg+moment", "ii  unit mass",
                                    "iii envelope", "iv  sqrt gradient",
                                    "v   interm. moment"};
            std::printf("kernel %s, d=%d, n=%d\n", spec.name.c_str(), dim, n);
            for (int p = 0; p < 5; ++p)
                std::printf("  %-20s %s  (measured %.6g, bound %.6g)\n",
                            names[p], rep.property[p].passed ? "PASS" : "FAIL",
                            rep.property[p].measured, rep.property[p].bound);
            if (!rep.smoothness_2k_gt_dp2)
                std::printf("  note: 2k <= d+2 (below the smoothness threshold)\n");
            if (!out_json.empty()) {
                std::ofstream out(out_json);
                out << rep.to_json() << "\n";
            }
            return rep.all_passed() ? 0 : 1;
        }
        if (w2->parsed()) {
            pme::GridField a = pme::read_field(field_a);
            pme::GridField b = pme::read_field(field_b);
            pme::TransportResult r;
            if (method == "quantile" || (method == "auto" && a.grid.dim == 1)) {
                r = pme::w2_circle_1d(a, b, false);
            } else {
                pme::SinkhornParams p;
                p.reg_target = reg;
                r = pme::w2_sinkhorn(a, b, p);
            }
            json j;
            j["distance"] = r.distance;
            j["method"] = r.method == pme::TransportResult::Method::quantile1d
                              ? "quantile1d"
                              : "sinkhorn";
            j["iterations"] = r.iterations;
            j["converged"] = r.converged;
            j["cut"] = r.cut;
            j["marginal_error"] = r.marginal_error;
            std::cout << j.dump(2) << "\n";
            if (!out_json.empty()) {
                std::ofstream out(out_json);
                out << j.dump(2) << "\n";
            }
            return 0;
        }
        pme::ExperimentConfig cfg =
            pme::ExperimentConfig::from_json_file(config_path);
        pme::PeriodicGrid grid(cfg.dimension, cfg.n);
        pme::GridField u0 =
            pme::initial_condition(cfg.initial, cfg.amplitude, grid);
        pme::SolverConfig scfg = solver_config(cfg);
        if (ra->parsed()) {
            pme::TorusKernel K = pme::realize_on_torus(
                cfg.make_kernel(), cfg.epsilons.at(0), grid);
            pme::Trajectory traj = pme::solve_aggregation_grid(u0, K, scfg);
            write_trajectory(traj, cfg.output_dir, "aggregation");
        } else if (rp->parsed()) {
            pme::Trajectory traj = pme::solve_pme_reference(u0, scfg);
            write_trajectory(traj, cfg.output_dir, "pme");
        } else if (rr->parsed()) {
            pme::TorusKernel K = pme::realize_on_torus(
                cfg.make_kernel(), cfg.epsilons.at(0), grid);
            pme::ParticleEnsemble ens =
                cfg.dimension == 1
                    ? pme::inverse_cdf_particles_1d(u0, cfg.particles)
                    : pme::equispaced_particles(grid, cfg.particles);
            pme::ParticleTrajectory pt = pme::simulate_particles(ens, K, scfg);
            fs::create_directories(cfg.output_dir);
            json manifest;
            manifest["times"] = pt.times;
            json files = json::array();
            for (std::size_t k = 0; k < pt.snapshots.size(); ++k) {
                pme::GridField dep = pme::deposit_particles(pt.snapshots[k], grid);
                std::string name = "particles_" + std::to_string(k) + ".field";
                pme::write_field(dep, (fs::path(cfg.output_dir) / name).string());
                files.push_back(name);
            }
            manifest["files"] = files;
            std::ofstream out(fs::path(cfg.output_dir) /
                              "particles_manifest.json");
            out << manifest.dump(2) << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
