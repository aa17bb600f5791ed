#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "besi/error.hpp"
#include "besi/experiment.hpp"

using namespace besi;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "besi_experiment_tests" / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

json tiny_json(const std::string& out) {
    json j = json::parse(R"({
        "head_model": {"n_electrodes": 16},
        "grid": {"sources_per_depth": 1, "depth_bins": 2},
        "noise_levels": [0.05],
        "solvers": [{"family": "wmne"}],
        "master_seed": 5
    })");
    j["output_dir"] = out;
    return j;
}

std::string where_of(const json& j) {
    try {
        config_from_json(j);
    } catch (const ConfigError& e) {
        return e.where();
    }
    return "no error";
}

}  // namespace

TEST(Config, DefaultsAndRoundTrip) {
    const auto c = config_from_json(tiny_json("x"));
    EXPECT_EQ(c.solvers.size(), 1u);
    EXPECT_EQ(c.solvers[0].optimizer, Optimizer::ClosedForm);
    const auto back = config_from_json(config_to_json(c));
    EXPECT_EQ(back.hash(), c.hash());
    const auto desk = ExperimentConfig::desk_scale();
    EXPECT_EQ(config_from_json(config_to_json(desk)).hash(), desk.hash());
    EXPECT_EQ(desk.solvers.size(), 11u);
}

TEST(Config, HashIgnoresOutputDirOnly) {
    auto a = config_from_json(tiny_json("one"));
    auto b = config_from_json(tiny_json("two"));
    EXPECT_EQ(a.hash(), b.hash());
    b.master_seed = 6;
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Config, ErrorsCarryJsonPointers) {
    auto j = tiny_json("x");
    j["grid"]["bogus"] = 1;
    EXPECT_EQ(where_of(j), "/grid/bogus");
    j = tiny_json("x");
    j["solvers"][0]["family"] = "nope";
    EXPECT_EQ(where_of(j), "/solvers/0/family");
    j = tiny_json("x");
    j["noise_levels"] = {0.1, "high"};
    EXPECT_EQ(where_of(j), "/noise_levels/1");
    j = tiny_json("x");
    j["solver_config"] = {{"max_outer_iters", 2.5}};
    EXPECT_EQ(where_of(j), "/solver_config/max_outer_iters");
    j = tiny_json("x");
    j["noise_levels"] = {-0.1};
    EXPECT_EQ(where_of(j), "/noise_levels/0");
    j = tiny_json("x");
    j["extra"] = true;
    EXPECT_EQ(where_of(j), "/extra");
}

TEST(Config, EmptySolverListRejectedBeforeWork) {
    auto j = tiny_json("x");
    j["solvers"] = json::array();
    EXPECT_EQ(where_of(j), "/solvers");
}

TEST(Config, DuplicateSolverNamesNeedLabels) {
    auto j = tiny_json("x");
    j["solvers"] = json::parse(R"([{"family":"wcg-ga","optimizer":"ias"},{"family":"wcg-ga","optimizer":"ias","alpha_bar":3}])");
    EXPECT_EQ(where_of(j), "/solvers/1");
    j["solvers"][1]["label"] = "wCG-Ga-IAS-a3";
    EXPECT_EQ(where_of(j), "no error");
}

TEST(Config, InvalidPriorCombinationRejected) {
    auto j = tiny_json("x");
    j["solvers"] = json::parse(R"([{"family":"wcg-gen","optimizer":"em","s":0.5}])");
    EXPECT_EQ(where_of(j), "/solvers/0");
}

TEST(Experiment, OneSolverTwoTrialsGivesTwoRows) {
    const auto dir = scratch("two_rows");
    const auto c = config_from_json(tiny_json(dir.string()));
    const auto out = run_experiment(c, {});
    ASSERT_EQ(out.rows.size(), 2u);
    EXPECT_EQ(out.computed_items, 2u);
    for (const auto& r : out.rows) {
        EXPECT_EQ(r.solver, "wMNE");
        EXPECT_TRUE(r.ok());
        EXPECT_EQ(r.config_hash, c.hash());
        EXPECT_EQ(r.version, version_string());
        EXPECT_GT(r.emd_mm, 0.0);
    }
    const auto rows = read_results_csv(dir / "results.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(first_line(dir / "results.csv"), results_header());
    EXPECT_TRUE(fs::exists(dir / "ground_truth.csv"));
    EXPECT_TRUE(fs::exists(dir / "timings.csv"));
    EXPECT_TRUE(fs::exists(dir / "config.json"));
}

TEST(Experiment, SameSeedGivesIdenticalFiles) {
    auto j = tiny_json("");
    j["solvers"] = json::parse(R"([{"family":"wmne"},{"family":"wcg-ga","optimizer":"em"},{"family":"wcl","optimizer":"ias"}])");
    j["noise_levels"] = {0.01, 0.1};
    j["output_dir"] = scratch("det_a").string();
    const auto a = config_from_json(j);
    j["output_dir"] = scratch("det_b").string();
    const auto b = config_from_json(j);
    run_experiment(a, {});
    ExperimentOptions two_threads;
    two_threads.threads = 2;
    run_experiment(b, two_threads);
    for (const char* f : {"results.csv", "ground_truth.csv"}) {
        EXPECT_EQ(slurp(fs::path(a.output_dir) / f), slurp(fs::path(b.output_dir) / f)) << f;
    }
}

TEST(Experiment, ResumeReusesTrialFiles) {
    const auto dir = scratch("resume");
    const auto c = config_from_json(tiny_json(dir.string()));
    run_experiment(c, {});
    const std::string first = slurp(dir / "results.csv");
    const auto again = run_experiment(c, {});
    EXPECT_EQ(again.resumed_items, 2u);
    EXPECT_EQ(again.computed_items, 0u);
    EXPECT_EQ(slurp(dir / "results.csv"), first);
    // a changed config invalidates the cached items
    auto changed = c;
    changed.noise_levels = {0.2};
    const auto fresh = run_experiment(changed, {});
    EXPECT_EQ(fresh.resumed_items, 0u);
}

TEST(Experiment, NoFilesMode) {
    const auto dir = scratch("nofiles");
    const auto c = config_from_json(tiny_json(dir.string()));
    ExperimentOptions o;
    o.write_files = false;
    EXPECT_EQ(run_experiment(c, o).rows.size(), 2u);
    EXPECT_FALSE(fs::exists(dir));
}

TEST(ResultsCsv, RowRoundTrip) {
    TrialResult r;
    r.trial_id = 3;
    r.solver = "wCL-EM";
    r.noise_percent = 0.1;
    r.source_index = 3;
    r.depth_true_mm = 12.25;
    r.recon_index = -1;
    r.depth_recon_mm = std::nan("");
    r.status = "error:no maximum";
    r.seed = 99;
    r.config_hash = "abc";
    r.version = "v1";
    const auto back = parse_csv_row(to_csv_row(r), "test");
    EXPECT_EQ(back.solver, r.solver);
    EXPECT_TRUE(std::isnan(back.depth_recon_mm));
    EXPECT_EQ(back.status, r.status);
    EXPECT_FALSE(back.ok());
}

TEST(Report, EmptyResultsRejected) {
    EXPECT_THROW(build_report({}, {{0, 30}}), ConstraintError);
}

TEST(Report, SingleTrialDoesNotCrash) {
    TrialResult r;
    r.solver = "wMNE";
    r.noise_percent = 0.01;
    r.depth_true_mm = 4.0;
    r.depth_recon_mm = 6.0;
    r.depth_error_mm = 2.0;
    r.emd_mm = 11.0;
    r.status = "converged";
    const auto rep = build_report({r}, SimulationConfig::uniform_bins(30, 3));
    const auto& g = rep.groups.at({"wMNE", 0.01});
    EXPECT_EQ(g.emd.count, 1u);
    EXPECT_EQ(g.emd.iqr, 0.0);
    EXPECT_EQ(g.emd.std, 0.0);
    EXPECT_FALSE(g.regression_valid);
    EXPECT_EQ(g.emd_by_bin[0].count, 1u);
    EXPECT_EQ(g.emd_by_bin[1].count, 0u);
    EXPECT_EQ(g.depth_error_percent[4], 100.0);
    const auto dir = scratch("report_single");
    write_report(rep, {r}, dir);
    EXPECT_TRUE(fs::exists(dir / "summary.json"));
}

TEST(Report, FailedRowsExcludedFromStatistics) {
    std::vector<TrialResult> rows(3);
    for (int i = 0; i < 3; ++i) {
        rows[i].solver = "wL";
        rows[i].noise_percent = 0.1;
        rows[i].depth_true_mm = 5.0 * i;
        rows[i].depth_recon_mm = 5.0 * i + 1;
        rows[i].depth_error_mm = 1.0;
        rows[i].emd_mm = 10.0 + i;
        rows[i].status = "max-iters";
    }
    rows[2].status = "error:bad";
    rows[2].emd_mm = std::nan("");
    const auto rep = build_report(rows, SimulationConfig::uniform_bins(30, 2));
    const auto& g = rep.groups.at({"wL", 0.1});
    EXPECT_EQ(g.failures, 1u);
    EXPECT_EQ(g.emd.count, 2u);
    EXPECT_DOUBLE_EQ(g.emd.median, 10.5);
}

TEST(Report, TableSchemas) {
    const auto dir = scratch("schema");
    const auto c = config_from_json(tiny_json(dir.string()));
    const auto out = run_experiment(c, {});
    write_report(build_report(out.rows, c.bins()), out.rows, dir / "report");
    const fs::path r = dir / "report";
    EXPECT_EQ(first_line(r / "emd_vs_depth.csv"),
              "solver,noise_percent,bin_low_mm,bin_high_mm,count,mean_emd_mm,median_emd_mm");
    EXPECT_EQ(first_line(r / "emd_summary.csv"), "solver,noise_percent,depth_bin,count,median,std,iqr,mean");
    EXPECT_EQ(first_line(r / "emd_distribution.csv"), "solver,noise_percent,trial_id,emd_mm");
    EXPECT_EQ(first_line(r / "depth_scatter.csv"), "solver,noise_percent,trial_id,depth_true_mm,depth_recon_mm");
    EXPECT_EQ(first_line(r / "depth_regression.csv"),
              "solver,noise_percent,count,slope,intercept,slope_ci_low,slope_ci_high,intercept_ci_low,"
              "intercept_ci_high");
    EXPECT_EQ(first_line(r / "depth_error_bins.csv"), "solver,noise_percent,count,pct_gt20,pct_15_20,pct_10_15,pct_5_10,pct_1_5,pct_le1");
    EXPECT_EQ(first_line(dir / "results.csv"),
              "trial_id,solver,noise_percent,source_index,depth_true_mm,recon_index,depth_recon_mm,"
              "depth_error_mm,emd_mm,iterations,status,seed,config_hash,version");
    const auto summary = json::parse(slurp(r / "summary.json"));
    EXPECT_EQ(summary["groups"].size(), 1u);
    for (const char* key : {"solver", "noise_percent", "count", "failures", "emd", "emd_by_depth_bin",
                            "depth_error_percent", "regression"}) {
        EXPECT_TRUE(summary["groups"][0].contains(key)) << key;
    }
}
