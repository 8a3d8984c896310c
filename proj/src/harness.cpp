#include "pme/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "pme/common.hpp"
#include "pme/field_io.hpp"
#include "pme/fields.hpp"

namespace pme {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ExperimentConfig::Kind kind_of(const std::string& s) {
    if (s == "rate1d") return ExperimentConfig::Kind::rate1d;
    if (s == "rateGeneralD") return ExperimentConfig::Kind::rateGeneralD;
    if (s == "energyDecay") return ExperimentConfig::Kind::energyDecay;
    if (s == "kernelValidation") return ExperimentConfig::Kind::kernelValidation;
    if (s == "particleConsistency")
        return ExperimentConfig::Kind::particleConsistency;
    if (s == "commutator1d") return ExperimentConfig::Kind::commutator1d;
    throw std::runtime_error("unknown experiment '" + s + "'");
}

const char* kind_name(ExperimentConfig::Kind k) {
    switch (k) {
        case ExperimentConfig::Kind::rate1d: return "rate1d";
        case ExperimentConfig::Kind::rateGeneralD: return "rateGeneralD";
        case ExperimentConfig::Kind::energyDecay: return "energyDecay";
        case ExperimentConfig::Kind::kernelValidation: return "kernelValidation";
        case ExperimentConfig::Kind::particleConsistency:
            return "particleConsistency";
        default: return "commutator1d";
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c;
    c.experiment = kind_of(j.at("experiment").get<std::string>());
    c.dimension = j.value("dimension", 1);
    c.n = j.value("n", 4096);
    if (j.contains("kernel")) {
        c.kernel_family = j["kernel"].value("family", "laplace1d");
        c.kernel_s = j["kernel"].value("s", 2.0);
    }
    c.epsilons = j.value("epsilons", std::vector<double>{});
    c.gamma = j.value("gamma", 1.2);
    c.horizon = j.value("horizon", 0.5);
    if (j.contains("initial")) {
        if (j["initial"].is_string()) {
            c.initial = j["initial"].get<std::string>();
        } else {
            c.initial = j["initial"].value("name", "sine");
            c.amplitude = j["initial"].value("amplitude", 0.5);
        }
    }
    c.output_dir = j.value("output_dir", "out");
    c.seed = j.value("seed", std::uint64_t(42));
    c.snapshots = j.value("snapshots", 11);
    c.cfl = j.value("cfl", 0.5);
    c.trials = j.value("trials", 20);
    c.pme_grid_cap = j.value("pme_grid_cap", 1024);
    c.particles = j.value("particles", std::size_t(100000));
    if (j.contains("sinkhorn")) {
        const json& s = j["sinkhorn"];
        c.sinkhorn.reg_target = s.value("reg", 1e-4);
        c.sinkhorn.reg_init = s.value("reg_init", 1e-2);
        c.sinkhorn.anneal_factor = s.value("anneal", 0.7);
        c.sinkhorn.stage_iters = s.value("stage_iters", 10);
        c.sinkhorn.max_iter = s.value("max_iter", 2000);
        c.sinkhorn.marginal_tol = s.value("tol", 1e-9);
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["experiment"] = kind_name(experiment);
    j["dimension"] = dimension;
    j["n"] = n;
    j["kernel"] = {{"family", kernel_family}, {"s", kernel_s}};
    j["epsilons"] = epsilons;
    j["gamma"] = gamma;
    j["horizon"] = horizon;
    j["initial"] = {{"name", initial}, {"amplitude", amplitude}};
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    j["snapshots"] = snapshots;
    j["cfl"] = cfl;
    j["trials"] = trials;
    j["pme_grid_cap"] = pme_grid_cap;
    j["particles"] = particles;
    j["sinkhorn"] = {{"reg", sinkhorn.reg_target},
                     {"reg_init", sinkhorn.reg_init},
                     {"anneal", sinkhorn.anneal_factor},
                     {"stage_iters", sinkhorn.stage_iters},
                     {"max_iter", sinkhorn.max_iter},
                     {"tol", sinkhorn.marginal_tol}};
    return j.dump(2);
}

KernelSpec ExperimentConfig::make_kernel() const {
    if (kernel_family == "laplace1d") {
        require(dimension == 1, "laplace1d kernel is 1D only");
        return laplace_kernel_1d();
    }
    if (kernel_family == "matern") return matern_kernel(kernel_s, dimension);
    throw std::runtime_error("unknown kernel family '" + kernel_family + "'");
}

void ExperimentConfig::validate() const {
    require(dimension >= 1 && dimension <= 3, "dimension must be 1..3");
    require(n >= 4, "n too small");
    double h = 1.0 / n;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        require(epsilons[i] >= 2.0 * h, "epsilon below 2h");
        if (i > 0)
            require(epsilons[i] < epsilons[i - 1],
                    "epsilons must be sorted descending");
    }
    require(horizon > 0.0, "horizon must be positive");
    require(snapshots >= 2, "need at least 2 snapshots");
    require(cfl > 0.0 && cfl <= 1.0, "cfl in (0, 1]");
}

RateFit fit_rate(const std::vector<std::array<double, 2>>& rows) {
    std::vector<std::array<double, 2>> keep;
    for (const auto& r : rows)
        if (r[1] > 0.0 && r[0] > 0.0) keep.push_back(r);
    require(keep.size() >= 3, "fit_rate: fewer than 3 positive rows");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double N = double(keep.size());
    for (const auto& r : keep) {
        double x = std::log(r[0]), y = std::log(r[1]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    RateFit f;
    double denom = N * sxx - sx * sx;
    require(std::abs(denom) > 1e-300, "fit_rate: degenerate abscissae");
    f.slope = (N * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / N;
    double ss_tot = syy - sy * sy / N;
    double ss_res = 0.0;
    for (const auto& r : keep) {
        double e = std::log(r[1]) - (f.intercept + f.slope * std::log(r[0]));
        ss_res += e * e;
    }
    f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

namespace {

std::vector<double> snapshot_times(double T, int count) {
    std::vector<double> t(count);
    for (int i = 0; i < count; ++i) t[i] = T * i / (count - 1);
    return t;
}

// PME reference trajectory on a capped grid, snapshots upsampled to n
Trajectory pme_reference(const ExperimentConfig& cfg) {
    int n_ref = std::min(cfg.n, cfg.pme_grid_cap);
    PeriodicGrid gref(cfg.dimension, n_ref);
    GridField u0 = initial_condition(cfg.initial, cfg.amplitude, gref);
    SolverConfig scfg;
    scfg.horizon = cfg.horizon;
    scfg.cfl_factor = cfg.cfl;
    scfg.snapshot_times = snapshot_times(cfg.horizon, cfg.snapshots);
    Trajectory traj = solve_pme_reference(u0, scfg);
    if (n_ref != cfg.n)
        for (GridField& s : traj.snapshots) s = resample_spectral(s, cfg.n);
    return traj;
}

EpsilonRun rate1d_single(const ExperimentConfig& cfg, const Trajectory& uref,
                         double eps) {
    PeriodicGrid grid(1, cfg.n);
    GridField u0 = initial_condition(cfg.initial, cfg.amplitude, grid);
    KernelSpec spec = cfg.make_kernel();
    TorusKernel K = realize_on_torus(spec, eps, grid);
    SolverConfig scfg;
    scfg.horizon = cfg.horizon;
    scfg.cfl_factor = cfg.cfl;
    scfg.snapshot_times = snapshot_times(cfg.horizon, cfg.snapshots);
    Trajectory ut = solve_aggregation_grid(u0, K, scfg);

    EpsilonRun run;
    run.epsilon = eps;
    run.method = "quantile1d";
    run.snapshot_times = ut.times;
    for (std::size_t k = 0; k < ut.snapshots.size(); ++k) {
        CommutatorRow row =
            commutator_decomposition_1d(uref.snapshots[k], ut.snapshots[k], K);
        row.time = ut.times[k];
        run.w2_series.push_back(row.w2);
        run.distance = std::max(run.distance, row.w2);
        if (k > 0) {
            run.g_max = std::max(run.g_max, row.G);
            run.c_over_eps = std::max(run.c_over_eps, std::abs(row.C) / eps);
        }
        run.commutator.rows.push_back(row);
    }
    // centered finite differences of (1/2) W2^2 for the ledger
    for (std::size_t k = 1; k + 1 < run.commutator.rows.size(); ++k) {
        double dt = run.snapshot_times[k + 1] - run.snapshot_times[k - 1];
        double a = run.w2_series[k + 1], b = run.w2_series[k - 1];
        run.commutator.rows[k].dhalf_w2_sq_dt = 0.5 * (a * a - b * b) / dt;
    }
    run.energy = check_energy_dissipation(ut, K);
    run.energy_ok = run.energy.energy_ok;
    run.entropy_ok = run.energy.entropy_ok;
    run.energy_slack = run.energy.energy_slack;
    run.entropy_slack = run.energy.entropy_slack;
    run.l2_error = l2_mollified_error(uref, ut, K);
    return run;
}

EpsilonRun rate_general_single(const ExperimentConfig& cfg,
                               const Trajectory& uref,
                               const std::vector<double>& self_duals,
                               double eps) {
    PeriodicGrid grid(cfg.dimension, cfg.n);
    GridField u0 = initial_condition(cfg.initial, cfg.amplitude, grid);
    KernelSpec spec = cfg.make_kernel();
    TorusKernel K = realize_on_torus(spec, eps, grid);
    SolverConfig scfg;
    scfg.horizon = cfg.horizon;
    scfg.cfl_factor = cfg.cfl;
    scfg.snapshot_times = snapshot_times(cfg.horizon, cfg.snapshots);
    Trajectory ut = solve_aggregation_grid(u0, K, scfg);

    EpsilonRun run;
    run.epsilon = eps;
    run.method = "sinkhorn";
    run.snapshot_times = ut.times;
    for (std::size_t k = 0; k < ut.snapshots.size(); ++k) {
        double sv = sinkhorn_self_dual(ut.snapshots[k], cfg.sinkhorn);
        TransportResult r = w2_sinkhorn_debiased_with(
            uref.snapshots[k], ut.snapshots[k], cfg.sinkhorn, self_duals[k], sv);
        run.w2_series.push_back(r.distance);
        run.iterations += r.iterations;
        run.distance = std::max(run.distance, r.distance);
    }
    run.energy = check_energy_dissipation(ut, K);
    run.energy_ok = run.energy.energy_ok;
    run.entropy_ok = run.energy.entropy_ok;
    run.energy_slack = run.energy.energy_slack;
    run.entropy_slack = run.energy.entropy_slack;
    run.l2_error = l2_mollified_error(uref, ut, K);
    return run;
}

void finalize_rate_report(RateReport& rep) {
    const std::vector<EpsilonRun>& runs = rep.runs;
    bool all_zero = true;
    for (const EpsilonRun& r : runs) all_zero &= r.distance <= 0.0;
    if (all_zero) {
        rep.flag = "identical solutions";
        rep.pass = false;
        return;
    }
    rep.distances_decreasing = true;
    for (std::size_t i = 1; i < runs.size(); ++i)
        rep.distances_decreasing &= runs[i].distance < runs[i - 1].distance;
    if (runs.size() < 3) {
        rep.flag = "need >= 3 points";
        rep.pass = false;
        return;
    }
    std::vector<std::array<double, 2>> rows, l2rows;
    for (const EpsilonRun& r : runs) {
        rows.push_back({r.epsilon, r.distance});
        l2rows.push_back({r.epsilon, r.l2_error});
    }
    rep.fit = fit_rate(rows);
    bool l2ok = true;
    for (const auto& r : l2rows) l2ok &= r[1] > 0.0;
    if (l2ok) rep.l2_fit = fit_rate(l2rows);
    rep.pass = rep.distances_decreasing && rep.fit->slope >= rep.pass_threshold;
}

RateReport run_rate1d(const ExperimentConfig& cfg) {
    RateReport rep;
    rep.config = cfg;
    rep.target_rate = 0.5;
    rep.pass_threshold = 0.45;
    Trajectory uref = pme_reference(cfg);
    std::vector<std::future<EpsilonRun>> futs;
    for (double eps : cfg.epsilons)
        futs.push_back(std::async(std::launch::async, rate1d_single,
                                  std::cref(cfg), std::cref(uref), eps));
    for (auto& f : futs) rep.runs.push_back(f.get());
    finalize_rate_report(rep);
    return rep;
}

RateReport run_rate_general(const ExperimentConfig& cfg) {
    RateReport rep;
    rep.config = cfg;
    KernelSpec spec = cfg.make_kernel();
    rep.target_rate = 1.0 / (cfg.dimension * (4.0 * spec.k + 2.0));
    rep.pass_threshold = rep.target_rate;
    Trajectory uref = pme_reference(cfg);
    std::vector<double> self_duals;
    for (const GridField& s : uref.snapshots)
        self_duals.push_back(sinkhorn_self_dual(s, cfg.sinkhorn));
    std::vector<std::future<EpsilonRun>> futs;
    for (double eps : cfg.epsilons)
        futs.push_back(std::async(std::launch::async, rate_general_single,
                                  std::cref(cfg), std::cref(uref),
                                  std::cref(self_duals), eps));
    for (auto& f : futs) rep.runs.push_back(f.get());
    finalize_rate_report(rep);
    return rep;
}

RateReport run_kernel_validation(const ExperimentConfig& cfg) {
    RateReport rep;
    rep.config = cfg;
    PeriodicGrid grid(cfg.dimension, cfg.n);
    rep.kernel_report = validate_admissibility(cfg.make_kernel(), grid,
                                               cfg.epsilons, cfg.gamma,
                                               cfg.trials, cfg.seed);
    rep.pass = rep.kernel_report->all_passed();
    rep.flag = rep.pass ? "" : "kernel admissibility check failed";
    return rep;
}

RateReport run_particle_consistency(const ExperimentConfig& cfg) {
    RateReport rep;
    rep.config = cfg;
    rep.target_rate = 0.0;
    std::vector<std::size_t> Ns = {cfg.particles / 100, cfg.particles / 10,
                                   cfg.particles};
    std::vector<int> ns = {cfg.n / 4, cfg.n / 2, cfg.n};
    for (int i = 0; i < 3; ++i) {
        PeriodicGrid grid(1, ns[i]);
        GridField u0 = initial_condition(cfg.initial, cfg.amplitude, grid);
        KernelSpec spec = cfg.make_kernel();
        TorusKernel K = realize_on_torus(spec, cfg.epsilons.at(0), grid);
        SolverConfig scfg;
        scfg.horizon = cfg.horizon;
        scfg.cfl_factor = cfg.cfl;
        scfg.snapshot_times = {cfg.horizon};
        Trajectory ref = solve_aggregation_grid(u0, K, scfg);
        ParticleEnsemble ens = inverse_cdf_particles_1d(u0, Ns[i]);
        ParticleTrajectory pt = simulate_particles(ens, K, scfg);
        TransportResult d =
            w2_between_grid_and_particles(ref.snapshots.back(), pt.snapshots.back());
        EpsilonRun run;
        run.epsilon = double(Ns[i]);
        run.distance = d.distance;
        run.method = "quantile1d";
        rep.runs.push_back(run);
    }
    rep.pass = rep.runs[0].distance > rep.runs[1].distance &&
               rep.runs[1].distance > rep.runs[2].distance;
    rep.distances_decreasing = rep.pass;
    rep.flag = rep.pass ? "" : "particle/grid W2 not decreasing along ladder";
    return rep;
}

}  // namespace

RateReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RateReport rep;
    switch (cfg.experiment) {
        case ExperimentConfig::Kind::rate1d:
        case ExperimentConfig::Kind::commutator1d:
            require(cfg.dimension == 1, "rate1d/commutator1d are 1D");
            rep = run_rate1d(cfg);
            break;
        case ExperimentConfig::Kind::rateGeneralD:
            rep = run_rate_general(cfg);
            break;
        case ExperimentConfig::Kind::energyDecay: {
            ExperimentConfig c2 = cfg;
            rep = cfg.dimension == 1 ? run_rate1d(c2) : run_rate_general(c2);
            bool ok = true;
            for (const EpsilonRun& r : rep.runs) ok &= r.energy_ok && r.entropy_ok;
            rep.pass = ok;
            rep.flag = ok ? "" : "energy dissipation violated";
            break;
        }
        case ExperimentConfig::Kind::kernelValidation:
            rep = run_kernel_validation(cfg);
            break;
        case ExperimentConfig::Kind::particleConsistency:
            rep = run_particle_consistency(cfg);
            break;
    }
    emit_report(rep, cfg.output_dir);
    return rep;
}

std::string RateReport::summary_json() const {
    json j;
    j["experiment"] = kind_name(config.experiment);
    j["target_rate"] = target_rate;
    j["pass_threshold"] = pass_threshold;
    j["pass"] = pass;
    j["flag"] = flag;
    j["distances_decreasing"] = distances_decreasing;
    if (fit) {
        j["slope"] = fit->slope;
        j["intercept"] = fit->intercept;
        j["r_squared"] = fit->r_squared;
    }
    if (l2_fit) j["l2_slope"] = l2_fit->slope;
    json rs = json::array();
    for (const EpsilonRun& r : runs) {
        json e;
        e["epsilon"] = r.epsilon;
        e["distance"] = r.distance;
        e["l2_error"] = r.l2_error;
        e["method"] = r.method;
        e["energy_ok"] = r.energy_ok;
        e["entropy_ok"] = r.entropy_ok;
        e["energy_slack"] = r.energy_slack;
        e["entropy_slack"] = r.entropy_slack;
        e["g_max"] = r.g_max;
        e["c_over_eps"] = r.c_over_eps;
        rs.push_back(e);
    }
    j["runs"] = rs;
    if (kernel_report)
        j["kernel_report"] = json::parse(kernel_report->to_json());
    return j.dump(2);
}

void emit_report(const RateReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    // rows.csv
    {
        std::ofstream out(fs::path(dir) / "rows.csv");
        out << "epsilon,distance,method,l2_error\n";
        for (const EpsilonRun& r : report.runs)
            out << fmt(r.epsilon) << ',' << fmt(r.distance) << ',' << r.method
                << ',' << fmt(r.l2_error) << '\n';
    }
    {
        std::ofstream out(fs::path(dir) / "summary.json");
        out << report.summary_json() << '\n';
    }
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        const EpsilonRun& r = report.runs[i];
        if (!r.energy.rows.empty()) {
            std::ofstream out(fs::path(dir) /
                              ("energy_eps" + std::to_string(i) + ".csv"));
            out << r.energy.to_csv();
        }
        if (!r.commutator.rows.empty()) {
            std::ofstream out(fs::path(dir) /
                              ("commutator_eps" + std::to_string(i) + ".csv"));
            out << r.commutator.to_csv();
        }
    }
    // log-log plot: one circle per row, fitted line, theoretical guide line
    {
        std::ofstream out(fs::path(dir) / "plot.svg");
        const double W = 480, H = 360, ml = 60, mr = 20, mt = 20, mb = 45;
        std::vector<std::array<double, 2>> pts;
        for (const EpsilonRun& r : report.runs)
            if (r.epsilon > 0.0 && r.distance > 0.0)
                pts.push_back({std::log10(r.epsilon), std::log10(r.distance)});
        double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
        if (!pts.empty()) {
            x0 = x1 = pts[0][0];
            y0 = y1 = pts[0][1];
            for (const auto& p : pts) {
                x0 = std::min(x0, p[0]);
                x1 = std::max(x1, p[0]);
                y0 = std::min(y0, p[1]);
                y1 = std::max(y1, p[1]);
            }
            if (x1 - x0 < 1e-12) x1 = x0 + 1;
            if (y1 - y0 < 1e-12) y1 = y0 + 1;
            double px = 0.08 * (x1 - x0), py = 0.08 * (y1 - y0);
            x0 -= px; x1 += px;
            y0 -= py; y1 += py;
        }
        auto X = [&](double lx) { return ml + (lx - x0) / (x1 - x0) * (W - ml - mr); };
        auto Y = [&](double ly) { return H - mb - (ly - y0) / (y1 - y0) * (H - mt - mb); };
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
            << "\" height=\"" << H << "\">\n";
        out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\""
            << (W - ml - mr) << "\" height=\"" << (H - mt - mb)
            << "\" fill=\"none\" stroke=\"black\"/>\n";
        out << "<text x=\"" << W / 2 << "\" y=\"" << H - 8
            << "\" text-anchor=\"middle\" font-size=\"12\">log10 epsilon</text>\n";
        out << "<text x=\"14\" y=\"" << H / 2
            << "\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2
            << ")\" text-anchor=\"middle\">log10 W2</text>\n";
        if (report.fit && !pts.empty()) {
            const double le = std::log(10.0);
            auto fy = [&](double lx) {
                return (report.fit->intercept + report.fit->slope * lx * le) / le;
            };
            out << "<path d=\"M" << X(x0) << ' ' << Y(fy(x0)) << " L" << X(x1)
                << ' ' << Y(fy(x1)) << "\" stroke=\"steelblue\" fill=\"none\"/>\n";
            // guide with the theoretical slope through the last point
            double gx = pts.back()[0], gy = pts.back()[1];
            auto gyf = [&](double lx) {
                return gy + report.target_rate * (lx - gx);
            };
            out << "<path d=\"M" << X(x0) << ' ' << Y(gyf(x0)) << " L" << X(x1)
                << ' ' << Y(gyf(x1))
                << "\" stroke=\"gray\" stroke-dasharray=\"4 3\" fill=\"none\"/>\n";
        }
        for (const auto& p : pts)
            out << "<circle cx=\"" << X(p[0]) << "\" cy=\"" << Y(p[1])
                << "\" r=\"3.5\" fill=\"crimson\"/>\n";
        out << "</svg>\n";
    }
    // final-time fields are written by the CLI runners; the rate pipeline
    // persists only the ledgers and fit artifacts
}

std::vector<std::array<double, 2>> read_rows_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "read_rows_csv: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::array<double, 2>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string e, d;
        std::getline(ss, e, ',');
        std::getline(ss, d, ',');
        rows.push_back({std::stod(e), std::stod(d)});
    }
    return rows;
}

}  // namespace pme
