// besi: command-line driver for lead-field generation, single solves,
// evaluation and the full simulation study.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "besi/error.hpp"
#include "besi/evaluation.hpp"
#include "besi/experiment.hpp"
#include "besi/forward.hpp"
#include "besi/io.hpp"
#include "besi/kernels.hpp"
#include "besi/model.hpp"
#include "besi/rng.hpp"
#include "besi/solvers.hpp"
#include "besi/weighting.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto& part : besi::io::split_csv_line(s)) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

std::vector<double> parse_numbers(const std::string& s, const std::string& flag) {
    std::vector<double> out;
    for (const auto& part : split_list(s)) out.push_back(besi::io::parse_double(part, flag));
    return out;
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void apply_threads(int threads) {
    if (threads <= 0) {
        if (const char* env = std::getenv("BESI_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) besi::kernels::set_thread_count(threads);
}

json source_space_json(const besi::SourceSpace& s) {
    json positions = json::array();
    for (besi::Index k = 0; k < s.n(); ++k) {
        const auto p = s.position(k);
        positions.push_back({p.x(), p.y(), p.z()});
    }
    return {{"n", s.n()},
            {"d", s.d()},
            {"depths_mm", std::vector<double>(s.depths().data(), s.depths().data() + s.n())},
            {"positions_mm", positions}};
}

besi::ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? besi::ExperimentConfig::desk_scale() : besi::load_config(path);
}

// ------------------------------------------------------------------ gen-leadfield

struct GenArgs {
    std::string config;
    std::string out_dir = "model";
    long long seed = -1;
};

int cmd_gen_leadfield(const GenArgs& a) {
    besi::ExperimentConfig c = config_or_default(a.config);
    if (a.seed >= 0) c.master_seed = static_cast<std::uint64_t>(a.seed);
    c.validate();
    const auto model = c.head_model();
    const auto grids = besi::make_dual_grids(model, c.simulation_config(), c.simulation_d, c.reconstruction_d);
    fs::create_directories(a.out_dir);
    const fs::path dir = a.out_dir;
    for (const auto& [name, space] : {std::pair{"simulation", &grids.simulation},
                                      std::pair{"reconstruction", &grids.reconstruction}}) {
        const auto field = besi::build_sphere_leadfield(model, *space);
        besi::io::write(dir / (std::string(name) + "_leadfield.besi"), field);
        besi::io::write(dir / (std::string(name) + "_sources.besi"), *space);
        json side = source_space_json(*space);
        side["grid"] = name;
        side["m"] = field.m();
        side["master_seed"] = c.master_seed;
        side["config_hash"] = c.hash();
        side["version"] = besi::version_string();
        besi::io::write_text_atomic(dir / (std::string(name) + "_sources.json"), side.dump(2) + "\n");
    }
    besi::io::write_matrix_csv(dir / "electrodes.csv", model.electrode_directions * model.radius_mm,
                               "electrode positions in mm (x,y,z)");
    std::cout << "wrote " << grids.simulation.n() << " simulation and " << grids.reconstruction.n()
              << " reconstruction sources, " << model.m() << " electrodes to " << dir << "\n";
    return 0;
}

// ------------------------------------------------------------------ weights

struct WeightsArgs {
    std::string leadfield;
    std::string sources;
    std::string measurement;
    std::string family = "wmne";
    std::string beta_rule = "auto";
    double alpha_bar = 0.0;
    double s = 1.0;
    double snr = 0.0;
    long long q = 1;
    std::string out = "weights.csv";
};

int cmd_weights(const WeightsArgs& a) {
    const auto L = besi::io::read_lead_field(a.leadfield);
    besi::NoiseModel noise = besi::NoiseModel::white(L.m(), 1.0);
    double snr = a.snr;
    if (!a.measurement.empty()) {
        const auto y = besi::io::read_measurement(a.measurement);
        noise = y.noise();
        if (snr <= 0.0) snr = besi::snr_from_data(y);
    }
    if (!(snr > 1.0)) throw besi::ConfigError("--snr", "SNR must exceed 1 (or pass --measurement)");
    const auto ctx = besi::SnrContext::from(L, noise, snr, a.q);
    const auto family = besi::parse_family(a.family);
    const auto rule = besi::parse_beta_rule(a.beta_rule);
    const besi::Index d = L.d();
    const double abar = a.alpha_bar > 0.0 ? a.alpha_bar : besi::default_alpha_bar(family, d);
    besi::Vector values;
    switch (family) {
        case besi::PriorFamily::WG: values = besi::weights_gaussian(ctx); break;
        case besi::PriorFamily::WL: values = besi::weights_laplace(ctx); break;
        case besi::PriorFamily::WGL: values = besi::weights_group_laplace(ctx, d); break;
        case besi::PriorFamily::WCG_GA: values = besi::betas_cg(ctx, abar, 1.0, d, rule); break;
        case besi::PriorFamily::WCG_IG: values = besi::betas_cg(ctx, abar, -1.0, d, rule); break;
        case besi::PriorFamily::WCG_GEN: values = besi::betas_cg(ctx, abar, a.s, d, rule); break;
        case besi::PriorFamily::WCL: values = besi::betas_wcl(ctx, abar); break;
        case besi::PriorFamily::WCGL: values = besi::betas_wcgl(ctx, abar, d); break;
    }
    besi::Vector depths = besi::Vector::Constant(L.n(), std::nan(""));
    if (!a.sources.empty()) {
        const auto space = besi::io::read_source_space(a.sources);
        if (space.n() != L.n()) throw besi::ConfigError(a.sources, "source count differs from lead field");
        depths = space.depths();
    }
    const besi::Vector th = besi::thetas(ctx);
    std::ostringstream out;
    out << "k,depth_mm,block_norm,theta,w_or_beta\n";
    for (besi::Index k = 0; k < L.n(); ++k) {
        out << k << ',' << besi::io::format_double(depths[k]) << ','
            << besi::io::format_double(std::sqrt(ctx.block_norms_sq[k])) << ','
            << besi::io::format_double(th[k]) << ',' << besi::io::format_double(values[k]) << '\n';
    }
    ensure_parent(a.out);
    besi::io::write_text_atomic(a.out, out.str());
    return 0;
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
    std::string leadfield;
    std::string sources;
    std::string indices;
    std::string moment;
    double amplitude = 10.0;
    double noise = 0.05;
    long long seed = 1;
    std::string out_dir = "measurements";
};

int cmd_simulate(const SimulateArgs& a) {
    const auto L = besi::io::read_lead_field(a.leadfield);
    const auto space = besi::io::read_source_space(a.sources);
    if (space.n() != L.n() || space.d() != L.d()) {
        throw besi::ConfigError(a.sources, "source space does not match lead field");
    }
    std::vector<besi::Index> idx;
    if (a.indices.empty()) {
        for (besi::Index k = 0; k < L.n(); ++k) idx.push_back(k);
    } else {
        for (double v : parse_numbers(a.indices, "--index")) {
            if (v < 0 || v >= static_cast<double>(L.n()) || v != std::floor(v)) {
                throw besi::ConfigError("--index", "index out of range");
            }
            idx.push_back(static_cast<besi::Index>(v));
        }
    }
    besi::Vector fixed;
    if (!a.moment.empty()) {
        const auto m = parse_numbers(a.moment, "--moment");
        if (static_cast<besi::Index>(m.size()) != L.d()) throw besi::ConfigError("--moment", "need d components");
        fixed = Eigen::Map<const besi::Vector>(m.data(), L.d());
    }
    fs::create_directories(a.out_dir);
    std::vector<besi::io::GroundTruthRow> truth;
    for (std::size_t t = 0; t < idx.size(); ++t) {
        const besi::Index k = idx[t];
        besi::Vector moment = fixed;
        if (moment.size() == 0) {
            // radial unit direction expressed in the source basis
            moment = space.basis(k) * space.position(k).normalized() * a.amplitude;
            if (moment.norm() == 0.0) {
                moment = besi::Vector::Zero(L.d());
                moment[0] = a.amplitude;
            }
        }
        const std::uint64_t seed = besi::mix_seed(static_cast<std::uint64_t>(a.seed), {1, t, 0});
        const auto sim = besi::simulate_measurement(L, k, moment, a.noise, seed);
        besi::io::write(fs::path(a.out_dir) / ("measurement_t" + std::to_string(t) + ".besi"), sim.measurement);
        truth.push_back({static_cast<std::int64_t>(t), static_cast<std::int64_t>(k), space.depths()[k],
                         moment, a.noise, seed});
    }
    besi::io::write_ground_truth_csv(fs::path(a.out_dir) / "ground_truth.csv", truth);
    return 0;
}

// ------------------------------------------------------------------ solve

struct SolveArgs {
    std::string leadfield;
    std::string measurement;
    std::string family = "wmne";
    std::string optimizer;
    std::string beta_rule = "auto";
    double alpha_bar = 0.0;
    double s = 1.0;
    double snr = 0.0;
    bool snr_from_data = false;
    long long q = 1;
    besi::SolverConfig solver;
    std::string root = "newton";
    std::string gamma_init = "unit";
    std::string out = "estimate.besi";
    std::string trace;
};

json trace_json(const besi::SolveResult& r) {
    const auto& t = r.trace;
    auto vec = [](const besi::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return {{"solver_id", t.solver_id},
            {"status", besi::to_string(t.status)},
            {"iterations", t.iterations},
            {"objective", t.objective},
            {"step", t.step},
            {"gamma_min", t.gamma_min},
            {"gamma_max", t.gamma_max},
            {"gamma_mean", t.gamma_mean},
            {"inner_iterations", t.inner_iterations},
            {"inner_capped", t.inner_capped},
            {"degeneracy_ratio", t.degeneracy_ratio},
            {"rescaled", t.rescaled},
            {"gamma", vec(r.gamma)},
            {"version", besi::version_string()}};
}

int cmd_solve(SolveArgs a) {
    const auto L = besi::io::read_lead_field(a.leadfield);
    const auto y = besi::io::read_measurement(a.measurement);
    const auto family = besi::parse_family(a.family);
    besi::Optimizer optimizer;
    if (!a.optimizer.empty()) {
        optimizer = besi::parse_optimizer(a.optimizer);
    } else if (family == besi::PriorFamily::WG) {
        optimizer = besi::Optimizer::ClosedForm;
    } else if (family == besi::PriorFamily::WL || family == besi::PriorFamily::WGL) {
        optimizer = besi::Optimizer::MM;
    } else {
        throw besi::ConfigError("--optimizer", "required for conditional families");
    }
    if (a.root != "newton" && a.root != "bisection") throw besi::ConfigError("--root-solver", "newton or bisection");
    a.solver.root_solver = a.root == "newton" ? besi::RootSolver::Newton : besi::RootSolver::Bisection;
    if (a.gamma_init != "unit" && a.gamma_init != "prior_mean") {
        throw besi::ConfigError("--gamma-init", "unit or prior_mean");
    }
    a.solver.gamma_init = a.gamma_init == "unit" ? besi::GammaInit::Unit : besi::GammaInit::PriorMean;
    double snr = a.snr_from_data ? besi::snr_from_data(y) : a.snr;
    if (!(snr > 1.0)) throw besi::ConfigError("--snr", "SNR must exceed 1 (or use --snr-from-data)");
    const auto ctx = besi::SnrContext::from(L, y.noise(), snr, a.q);
    const auto prior = besi::make_prior(family, optimizer, ctx, L.d(), a.alpha_bar, a.s,
                                        besi::parse_beta_rule(a.beta_rule));
    const auto result = besi::solve(prior, L, y, a.solver);
    ensure_parent(a.out);
    besi::io::write(a.out, result.estimate);
    const std::string trace = a.trace.empty() ? fs::path(a.out).replace_extension(".json").string() : a.trace;
    json j = trace_json(result);
    j["snr"] = snr;
    ensure_parent(trace);
    besi::io::write_text_atomic(trace, j.dump(2) + "\n");
    std::cout << result.trace.solver_id << ": " << besi::to_string(result.trace.status) << " after "
              << result.trace.iterations << " iterations\n";
    return 0;
}

// ------------------------------------------------------------------ evaluate

struct EvaluateArgs {
    std::string truth_sources;
    std::string recon_sources;
    std::string ground_truth;
    std::string manifest;
    std::string mass = "amplitude";
    double threshold = 1e-9;
    double depth_max = 30.0;
    long long depth_bins = 10;
    std::string out_dir = "evaluation";
};

int cmd_evaluate(const EvaluateArgs& a) {
    const auto sim = besi::io::read_source_space(a.truth_sources);
    const auto recon = besi::io::read_source_space(a.recon_sources);
    std::map<std::int64_t, besi::io::GroundTruthRow> truth;
    for (auto& r : besi::io::read_ground_truth_csv(a.ground_truth)) truth[r.trial_id] = r;
    if (a.mass != "amplitude" && a.mass != "squared") throw besi::ConfigError("--mass", "amplitude or squared");

    // manifest: trial_id,solver,estimate_path[,trace_path]; relative paths
    // resolve against the manifest's directory
    std::ifstream in(a.manifest);
    if (!in) throw besi::ConfigError(a.manifest, "cannot open manifest");
    const fs::path base = fs::path(a.manifest).parent_path();
    std::string line;
    std::size_t lineno = 0;
    std::vector<besi::TrialResult> rows;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = a.manifest + ":" + std::to_string(lineno);
        if (line.empty() || line[0] == '#' || line.rfind("trial_id", 0) == 0) continue;
        const auto f = besi::io::split_csv_line(line);
        if (f.size() < 3) throw besi::ConfigError(where, "expected trial_id,solver,estimate_path");
        besi::TrialResult r;
        const double id = besi::io::parse_double(f[0], where);
        if (id < 0 || id != std::floor(id)) throw besi::ConfigError(where, "trial_id must be a nonnegative integer");
        r.trial_id = static_cast<std::int64_t>(id);
        const auto t = truth.find(r.trial_id);
        if (t == truth.end()) throw besi::ConfigError(where, "trial not in ground truth");
        if (t->second.source_index < 0 || t->second.source_index >= sim.n()) {
            throw besi::ConfigError(where, "source index outside the simulation grid");
        }
        r.solver = f[1];
        r.noise_percent = t->second.noise_percent;
        r.source_index = t->second.source_index;
        r.depth_true_mm = sim.depths()[r.source_index];
        r.seed = t->second.seed;
        r.version = besi::version_string();
        const fs::path est_path = fs::path(f[2]).is_absolute() ? fs::path(f[2]) : base / f[2];
        fs::path trace_path = f.size() > 3 && !f[3].empty() ? fs::path(f[3]) : fs::path(est_path).replace_extension(".json");
        if (trace_path.is_relative() && f.size() > 3 && !f[3].empty()) trace_path = base / trace_path;
        r.status = "converged";
        if (fs::exists(trace_path)) {
            std::ifstream tj(trace_path);
            const json j = json::parse(tj, nullptr, false);
            if (j.is_object()) {
                r.iterations = j.value("iterations", 0);
                r.status = j.value("status", std::string("converged"));
            }
        }
        try {
            const auto est = besi::io::read_estimate(est_path);
            if (est.n() != recon.n() || est.d() != recon.d()) {
                throw besi::ConfigError(est_path.string(), "estimate does not match reconstruction grid");
            }
            r.recon_index = besi::index_of_max(est);
            r.depth_recon_mm = recon.depths()[r.recon_index];
            r.depth_error_mm = std::abs(r.depth_recon_mm - r.depth_true_mm);
            const auto mass = besi::MassDistribution::from_estimate(est, recon, a.mass == "squared", a.threshold);
            r.emd_mm = besi::emd_single_truth(mass, sim.position(r.source_index));
        } catch (const besi::ConfigError&) {
            throw;
        } catch (const besi::Error& e) {
            r.recon_index = -1;
            r.depth_recon_mm = r.depth_error_mm = r.emd_mm = std::nan("");
            std::string msg = e.what();
            for (char& c : msg) {
                if (c == ',') c = ';';
            }
            r.status = "error:" + msg;
        }
        rows.push_back(std::move(r));
    }
    fs::create_directories(a.out_dir);
    besi::write_results_csv(fs::path(a.out_dir) / "results.csv", rows);
    const auto bins = besi::SimulationConfig::uniform_bins(a.depth_max, a.depth_bins);
    besi::write_report(besi::build_report(rows, bins), rows, a.out_dir);
    return 0;
}

// ------------------------------------------------------------------ experiment / report

struct ExperimentArgs {
    std::string config;
    std::string out_dir;
    std::string solvers;
    std::string noise;
    long long seed = -1;
    int threads = 0;
    bool no_resume = false;
    bool quiet = false;
};

int cmd_experiment(const ExperimentArgs& a) {
    besi::ExperimentConfig c = config_or_default(a.config);
    if (a.seed >= 0) c.master_seed = static_cast<std::uint64_t>(a.seed);
    if (!a.out_dir.empty()) c.output_dir = a.out_dir;
    if (!a.noise.empty()) c.noise_levels = parse_numbers(a.noise, "--noise");
    if (!a.solvers.empty()) {
        std::vector<besi::SolverSpec> keep;
        for (const auto& name : split_list(a.solvers)) {
            bool found = false;
            for (const auto& s : c.solvers) {
                if (s.name() == name) {
                    keep.push_back(s);
                    found = true;
                }
            }
            if (!found) throw besi::ConfigError("--solvers", "no solver named '" + name + "' in the config");
        }
        c.solvers = keep;
    }
    c.validate();
    apply_threads(a.threads);
    besi::ExperimentOptions opt;
    opt.resume = !a.no_resume;
    if (!a.quiet) {
        opt.progress = [](std::size_t done, std::size_t total) {
            if (done == total || done % 25 == 0) std::cerr << "\r" << done << "/" << total << " items" << std::flush;
            if (done == total) std::cerr << "\n";
        };
    }
    const auto out = besi::run_experiment(c, opt);
    besi::write_report(besi::build_report(out.rows, c.bins()), out.rows, fs::path(c.output_dir) / "report");
    std::size_t failed = 0;
    for (const auto& r : out.rows) failed += r.ok() ? 0 : 1;
    std::cout << out.rows.size() << " rows (" << out.computed_items << " items computed, " << out.resumed_items
              << " resumed, " << failed << " solver failures) in " << c.output_dir << "\n";
    return 0;
}

struct ReportArgs {
    std::string results;
    std::string config;
    std::string out_dir;
};

int cmd_report(const ReportArgs& a) {
    const auto rows = besi::read_results_csv(a.results);
    const besi::ExperimentConfig c = config_or_default(a.config);
    const fs::path dir = a.out_dir.empty() ? fs::path(a.results).parent_path() / "report" : fs::path(a.out_dir);
    besi::write_report(besi::build_report(rows, c.bins()), rows, dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian EEG source imaging: weighted priors, solvers and a sphere-model study"};
    app.set_version_flag("--version", besi::version_string());
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP threads (default: BESI_THREADS or the OpenMP default)");

    GenArgs gen;
    auto* g = app.add_subcommand("gen-leadfield", "Build simulation and reconstruction grids with lead fields");
    g->add_option("--config", gen.config, "Experiment config (head model and grid sections)");
    g->add_option("--seed", gen.seed, "Master seed override");
    g->add_option("--out-dir", gen.out_dir, "Output directory");

    WeightsArgs w;
    auto* wc = app.add_subcommand("weights", "Per-location weights or scale parameters from the SNR");
    wc->add_option("--leadfield", w.leadfield, "Lead-field container")->required();
    wc->add_option("--sources", w.sources, "Source-space container (for the depth column)");
    wc->add_option("--measurement", w.measurement, "Measurement container (noise model, data SNR)");
    wc->add_option("--family", w.family, "wmne|wl|wgl|wcg-ga|wcg-ig|wcg-gen|wcl|wcgl");
    wc->add_option("--alpha-bar", w.alpha_bar, "Shape parameter (default: family default)");
    wc->add_option("--s", w.s, "Generalized-gamma exponent (wcg-gen)");
    wc->add_option("--beta-rule", w.beta_rule, "auto|general|group_laplace_table|group_laplace_moment");
    wc->add_option("--snr", w.snr, "Signal-to-noise ratio (> 1)");
    wc->add_option("--q", w.q, "Expected number of active sources");
    wc->add_option("--out", w.out, "Output CSV");

    SimulateArgs sim;
    auto* sc = app.add_subcommand("simulate", "Simulate noisy measurements from single sources");
    sc->add_option("--leadfield", sim.leadfield, "Lead-field container")->required();
    sc->add_option("--sources", sim.sources, "Source-space container")->required();
    sc->add_option("--index", sim.indices, "Comma-separated source indices (default: every source)");
    sc->add_option("--moment", sim.moment, "Comma-separated moment in the source basis (default: radial)");
    sc->add_option("--amplitude", sim.amplitude, "Radial moment amplitude in nAm");
    sc->add_option("--noise", sim.noise, "Relative noise level, 0.05 = 5 %");
    sc->add_option("--seed", sim.seed, "Master seed");
    sc->add_option("--out-dir", sim.out_dir, "Output directory");

    SolveArgs so;
    auto* sv = app.add_subcommand("solve", "Reconstruct one measurement");
    sv->add_option("--leadfield", so.leadfield, "Lead-field container")->required();
    sv->add_option("--measurement", so.measurement, "Measurement container")->required();
    sv->add_option("--family", so.family, "wmne|wl|wgl|wcg-ga|wcg-ig|wcg-gen|wcl|wcgl");
    sv->add_option("--optimizer", so.optimizer, "closed|mm|ias|em");
    sv->add_option("--alpha-bar", so.alpha_bar, "Shape parameter (default: family default)");
    sv->add_option("--s", so.s, "Generalized-gamma exponent (wcg-gen)");
    sv->add_option("--beta-rule", so.beta_rule, "auto|general|group_laplace_table|group_laplace_moment");
    sv->add_option("--snr", so.snr, "Signal-to-noise ratio (> 1)");
    sv->add_flag("--snr-from-data", so.snr_from_data, "Estimate the SNR from the measurement");
    sv->add_option("--q", so.q, "Expected number of active sources");
    sv->add_option("--max-outer", so.solver.max_outer_iters, "Outer iteration cap");
    sv->add_option("--max-inner", so.solver.max_inner_iters, "MM-LQA iteration cap");
    sv->add_option("--outer-tol", so.solver.outer_tol, "Relative change stopping tolerance");
    sv->add_option("--inner-tol", so.solver.inner_tol, "MM-LQA stopping tolerance");
    sv->add_option("--lqa-epsilon", so.solver.lqa_epsilon, "MM-LQA smoothing");
    sv->add_option("--root-solver", so.root, "newton|bisection");
    sv->add_option("--gamma-init", so.gamma_init, "unit|prior_mean");
    sv->add_option("--out", so.out, "Estimate container");
    sv->add_option("--trace", so.trace, "Trace JSON (default: estimate path with .json)");

    EvaluateArgs ev;
    auto* ec = app.add_subcommand("evaluate", "Score estimate files against ground truth");
    ec->add_option("--truth-sources", ev.truth_sources, "Simulation source-space container")->required();
    ec->add_option("--recon-sources", ev.recon_sources, "Reconstruction source-space container")->required();
    ec->add_option("--ground-truth", ev.ground_truth, "Ground-truth CSV")->required();
    ec->add_option("--manifest", ev.manifest, "CSV: trial_id,solver,estimate_path[,trace_path]")->required();
    ec->add_option("--mass", ev.mass, "amplitude|squared");
    ec->add_option("--threshold", ev.threshold, "Relative mass threshold");
    ec->add_option("--depth-max", ev.depth_max, "Depth range for the bins (mm)");
    ec->add_option("--depth-bins", ev.depth_bins, "Number of depth bins");
    ec->add_option("--out-dir", ev.out_dir, "Output directory");

    ExperimentArgs ex;
    auto* xc = app.add_subcommand("experiment", "Run the simulation study (resumable)");
    xc->add_option("--config", ex.config, "Experiment config (default: built-in desk-scale study)");
    xc->add_option("--out-dir", ex.out_dir, "Output directory override");
    xc->add_option("--solvers", ex.solvers, "Comma-separated subset of solver names");
    xc->add_option("--noise", ex.noise, "Comma-separated noise levels override");
    xc->add_option("--seed", ex.seed, "Master seed override");
    xc->add_flag("--no-resume", ex.no_resume, "Recompute every item");
    xc->add_flag("--quiet", ex.quiet, "No progress output");

    ReportArgs rp;
    auto* rc = app.add_subcommand("report", "Recompute report tables from a results CSV");
    rc->add_option("--results", rp.results, "results.csv")->required();
    rc->add_option("--config", rp.config, "Experiment config (for the depth bins)");
    rc->add_option("--out-dir", rp.out_dir, "Output directory (default: <results dir>/report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    ex.threads = threads;
    const bool single_solve = sv->parsed();
    try {
        apply_threads(threads);
        if (g->parsed()) return cmd_gen_leadfield(gen);
        if (wc->parsed()) return cmd_weights(w);
        if (sc->parsed()) return cmd_simulate(sim);
        if (sv->parsed()) return cmd_solve(so);
        if (ec->parsed()) return cmd_evaluate(ev);
        if (xc->parsed()) return cmd_experiment(ex);
        if (rc->parsed()) return cmd_report(rp);
    } catch (const besi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const besi::ConstraintError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const besi::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return single_solve ? kExitNumerical : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
