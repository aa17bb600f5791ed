#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "besi/evaluation.hpp"
#include "besi/forward.hpp"
#include "besi/solvers.hpp"
#include "besi/weighting.hpp"

namespace besi {

/// Version string stamped into result rows.
const char* version_string();

struct SolverSpec {
    PriorFamily family = PriorFamily::WG;
    Optimizer optimizer = Optimizer::ClosedForm;
    double alpha_bar = 0.0;  // <= 0 selects the family default
    double s = 1.0;          // WCG_GEN only
    BetaRule beta_rule = BetaRule::Auto;
    std::string label;       // defaults to the prior id

    std::string name() const;
};

enum class SnrMode { FromNoise, FromData, Fixed };

/// Complete, serializable description of a simulation study.
struct ExperimentConfig {
    // head model
    double radius_mm = 92.0;
    double shell_min_mm = 40.0;
    double shell_max_mm = 70.0;
    double conductivity = 0.33;
    Index n_electrodes = 64;
    double electrode_min_z = -0.2;
    // grids
    Index sources_per_depth = 30;
    double depth_max_mm = 30.0;
    Index depth_bins = 10;
    double jitter_max_mm = 3.0;
    double source_cap_min_z = 0.0;
    Index simulation_d = 1;
    Index reconstruction_d = 3;
    double moment_nAm = 10.0;
    // study
    std::vector<double> noise_levels = {0.01, 0.10};
    SnrMode snr_mode = SnrMode::FromNoise;
    double snr_value = 0.0;
    Index q = 1;
    std::vector<SolverSpec> solvers;
    SolverConfig solver_config;
    bool emd_squared = false;
    double emd_threshold = 1e-9;
    std::uint64_t master_seed = 1;
    std::string output_dir = "results";

    /// Throws ConfigError with a JSON-pointer location.
    void validate() const;

    SphereHeadModel head_model() const;
    SimulationConfig simulation_config() const;
    std::vector<std::pair<double, double>> bins() const;

    /// FNV-1a 64 of the canonical JSON without output_dir, as 16 hex digits.
    std::string hash() const;

    /// The desk-scale study: 11 solver variants, 1 % and 10 % noise.
    static ExperimentConfig desk_scale();
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

/// One (trial, noise level, solver) outcome.
struct TrialResult {
    std::int64_t trial_id = 0;
    std::string solver;
    double noise_percent = 0.0;
    std::int64_t source_index = 0;
    double depth_true_mm = 0.0;
    std::int64_t recon_index = -1;
    double depth_recon_mm = 0.0;
    double depth_error_mm = 0.0;
    double emd_mm = 0.0;
    int iterations = 0;
    std::string status;  // converged | max-iters | error:<message>
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string version;
    double runtime_s = 0.0;  // written only to timings.csv

    bool ok() const { return status == "converged" || status == "max-iters"; }
};

/// Results CSV header (no runtime column).
const std::string& results_header();
std::string to_csv_row(const TrialResult& r);
TrialResult parse_csv_row(const std::string& line, const std::string& where);
void write_results_csv(const std::filesystem::path& path, const std::vector<TrialResult>& rows);
std::vector<TrialResult> read_results_csv(const std::filesystem::path& path);

struct ExperimentOptions {
    bool write_files = true;
    bool resume = true;
    int threads = 0;  // <= 0 keeps the current OpenMP setting
    std::function<void(std::size_t, std::size_t)> progress;
};

struct ExperimentOutput {
    std::vector<TrialResult> rows;  // canonical order: noise, trial, solver
    std::size_t resumed_items = 0;
    std::size_t computed_items = 0;
};

/// Simulates on one grid, reconstructs on the other and evaluates, for every
/// (trial, noise level, solver). Per-item files under output_dir/trials make
/// the sweep resumable; a solver error is recorded in the status column.
ExperimentOutput run_experiment(const ExperimentConfig& config, const ExperimentOptions& options = {});

/// Aggregates grouped by (solver, noise).
struct GroupReport {
    Summary emd;
    std::vector<Summary> emd_by_bin;   // one per depth bin; count 0 when empty
    std::vector<double> mean_emd_by_bin;
    Regression regression;
    bool regression_valid = false;
    std::array<double, 6> depth_error_percent{};
    std::size_t failures = 0;
};

struct Report {
    std::vector<std::pair<double, double>> bins;
    std::map<std::pair<std::string, double>, GroupReport> groups;
    std::vector<std::string> solver_order;
    std::vector<double> noise_order;
};

/// Throws ConstraintError for an empty results set.
Report build_report(const std::vector<TrialResult>& rows,
                    const std::vector<std::pair<double, double>>& bins);

/// Writes emd_vs_depth.csv, emd_summary.csv, emd_distribution.csv,
/// depth_scatter.csv, depth_regression.csv, depth_error_bins.csv and
/// summary.json into `dir`.
void write_report(const Report& report, const std::vector<TrialResult>& rows,
                  const std::filesystem::path& dir);

}  // namespace besi
