#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pme/common.hpp"
#include "pme/harness.hpp"

using namespace pme;
namespace fs = std::filesystem;

TEST_CASE("fit_rate on synthetic data") {
    std::vector<std::array<double, 2>> rows;
    for (double e : {0.2, 0.1, 0.05, 0.025})
        rows.push_back({e, std::sqrt(e)});
    RateFit f = fit_rate(rows);
    CHECK(f.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    rows.clear();
    for (double e : {0.2, 0.1, 0.05, 0.025}) rows.push_back({e, 3.0 * e});
    f = fit_rate(rows);
    CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    // 1% multiplicative noise: slope within 0.5 +- 0.05
    Rng rng(123);
    for (int rep = 0; rep < 10; ++rep) {
        rows.clear();
        for (double e : {0.2, 0.1, 0.05, 0.025, 0.0125})
            rows.push_back({e, std::sqrt(e) * (1.0 + 0.01 * rng.normal())});
        f = fit_rate(rows);
        CHECK(std::abs(f.slope - 0.5) <= 0.05);
    }

    // nonpositive rows dropped; < 3 left is an error
    rows = {{0.2, 0.1}, {0.1, 0.0}, {0.05, -1.0}, {0.025, 0.05}};
    CHECK_THROWS(fit_rate(rows));
}

TEST_CASE("config parsing, validation, round trip") {
    const char* text = R"({
      "experiment": "rate1d", "dimension": 1, "n": 512,
      "kernel": {"family": "laplace1d"},
      "epsilons": [0.2, 0.1, 0.05], "horizon": 0.1,
      "initial": {"name": "sine", "amplitude": 0.5},
      "seed": 7, "snapshots": 3, "output_dir": "/tmp/pme_cfg_test"
    })";
    ExperimentConfig cfg = ExperimentConfig::from_json_text(text);
    CHECK(cfg.n == 512);
    CHECK(cfg.epsilons.size() == 3);
    cfg.validate();

    ExperimentConfig back = ExperimentConfig::from_json_text(cfg.to_json());
    CHECK(back.n == cfg.n);
    CHECK(back.epsilons == cfg.epsilons);
    CHECK(back.seed == cfg.seed);

    ExperimentConfig bad = cfg;
    bad.epsilons = {0.05, 0.1};  // not descending
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.epsilons = {1.0 / 4096.0};  // below 2h
    CHECK_THROWS(bad.validate());
}

TEST_CASE("emit_report: csv round trip and svg structure") {
    RateReport rep;
    rep.config.output_dir = "/tmp/pme_report_test";
    for (double e : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
        EpsilonRun r;
        r.epsilon = e;
        r.distance = 0.7 * std::pow(e, 0.47) * (1.0 + 0.01 * e);
        r.method = "quantile1d";
        rep.runs.push_back(r);
    }
    std::vector<std::array<double, 2>> rows;
    for (const EpsilonRun& r : rep.runs) rows.push_back({r.epsilon, r.distance});
    rep.fit = fit_rate(rows);
    rep.target_rate = 0.5;
    emit_report(rep, rep.config.output_dir);

    auto got = read_rows_csv("/tmp/pme_report_test/rows.csv");
    REQUIRE(got.size() == rep.runs.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i][0] == rep.runs[i].epsilon);
        CHECK(got[i][1] == rep.runs[i].distance);
    }

    std::ifstream svg("/tmp/pme_report_test/plot.svg");
    std::string s((std::istreambuf_iterator<char>(svg)),
                  std::istreambuf_iterator<char>());
    std::size_t circles = 0, paths = 0, pos = 0;
    while ((pos = s.find("<circle", pos)) != std::string::npos) ++circles, ++pos;
    pos = 0;
    while ((pos = s.find("<path", pos)) != std::string::npos) ++paths, ++pos;
    CHECK(circles == 5);
    CHECK(paths == 2);

    // empty report: header-only csv, pass=false in the summary
    RateReport empty;
    emit_report(empty, "/tmp/pme_report_empty");
    CHECK(read_rows_csv("/tmp/pme_report_empty/rows.csv").empty());
    std::ifstream sj("/tmp/pme_report_empty/summary.json");
    std::string js((std::istreambuf_iterator<char>(sj)),
                   std::istreambuf_iterator<char>());
    CHECK(js.find("\"pass\": false") != std::string::npos);
}

TEST_CASE("degenerate experiment flags") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentConfig::Kind::rate1d;
    cfg.n = 256;
    cfg.kernel_family = "laplace1d";
    cfg.horizon = 0.02;
    cfg.snapshots = 3;
    cfg.output_dir = "/tmp/pme_degenerate";
    cfg.pme_grid_cap = 256;

    // a single epsilon cannot support a fit
    cfg.epsilons = {0.1};
    cfg.initial = "sine";
    RateReport r1 = run_experiment(cfg);
    CHECK(r1.flag == "need >= 3 points");
    CHECK_FALSE(r1.pass);

    // uniform initial data: identical solutions
    cfg.epsilons = {0.2, 0.1, 0.05};
    cfg.initial = "uniform";
    RateReport r2 = run_experiment(cfg);
    CHECK(r2.flag == "identical solutions");
    CHECK_FALSE(r2.pass);
}

TEST_CASE("small end-to-end rate1d run") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentConfig::Kind::rate1d;
    cfg.n = 512;
    cfg.kernel_family = "laplace1d";
    cfg.epsilons = {0.2, 0.1, 0.05};
    cfg.horizon = 0.2;
    cfg.snapshots = 5;
    cfg.initial = "sine";
    cfg.amplitude = 0.5;
    cfg.pme_grid_cap = 512;
    cfg.output_dir = "/tmp/pme_small_rate";
    RateReport rep = run_experiment(cfg);
    REQUIRE(rep.runs.size() == 3);
    CHECK(rep.distances_decreasing);
    REQUIRE(rep.fit.has_value());
    CHECK(rep.fit->slope >= 0.45);
    CHECK(rep.pass);
    for (const EpsilonRun& r : rep.runs) {
        CHECK(r.energy_ok);
        CHECK(r.entropy_ok);
        CHECK(r.distance > 0.0);
        CHECK(r.l2_error > 0.0);
    }
    CHECK(fs::exists("/tmp/pme_small_rate/rows.csv"));
    CHECK(fs::exists("/tmp/pme_small_rate/summary.json"));
    CHECK(fs::exists("/tmp/pme_small_rate/plot.svg"));
    CHECK(fs::exists("/tmp/pme_small_rate/energy_eps0.csv"));
    CHECK(fs::exists("/tmp/pme_small_rate/commutator_eps0.csv"));
}

TEST_CASE("determinism: identical config and seed give identical csv") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentConfig::Kind::rate1d;
    cfg.n = 256;
    cfg.kernel_family = "laplace1d";
    cfg.epsilons = {0.2, 0.1, 0.05};
    cfg.horizon = 0.05;
    cfg.snapshots = 3;
    cfg.initial = "sine";
    cfg.pme_grid_cap = 256;
    cfg.seed = 99;

    cfg.output_dir = "/tmp/pme_det_a";
    run_experiment(cfg);
    cfg.output_dir = "/tmp/pme_det_b";
    run_experiment(cfg);
    for (const char* name : {"rows.csv", "summary.json"}) {
        std::ifstream fa(std::string("/tmp/pme_det_a/") + name);
        std::ifstream fb(std::string("/tmp/pme_det_b/") + name);
        std::string sa((std::istreambuf_iterator<char>(fa)),
                       std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(fb)),
                       std::istreambuf_iterator<char>());
        CHECK(sa == sb);
    }
}
