#include "besi/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

#include <omp.h>

#include "besi/error.hpp"
#include "besi/io.hpp"
#include "besi/kernels.hpp"
#include "besi/model.hpp"
#include "besi/rng.hpp"

#ifndef BESI_VERSION
#define BESI_VERSION "unknown"
#endif

namespace besi {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version_string() { return BESI_VERSION; }

std::string SolverSpec::name() const {
    if (!label.empty()) return label;
    PriorSpec p;
    p.family = family;
    p.optimizer = optimizer;
    return p.id();
}

// ------------------------------------------------------------------ config

namespace {

// Typed access to one JSON object; every key read is remembered so unknown
// keys can be reported with their pointer.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
        if (!j_.is_object()) throw ConfigError(where(), "expected an object");
    }

    std::string where(const std::string& key = "") const {
        const std::string base = pointer_.empty() ? "" : pointer_;
        return key.empty() ? (base.empty() ? "/" : base) : base + "/" + key;
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(where(key), "expected a number");
            out = v->get<double>();
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigError(where(key), "expected an integer");
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned() || v->get<long long>() >= 0) {
                    out = v->get<Int>();
                    return;
                }
                throw ConfigError(where(key), "expected a nonnegative integer");
            } else {
                out = v->get<Int>();
            }
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(where(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(where(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw ConfigError(where(key), "expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number()) {
                    throw ConfigError(where(key) + "/" + std::to_string(i), "expected a number");
                }
                out.push_back((*v)[i].get<double>());
            }
        }
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError(where(key), "unknown key");
        }
    }

private:
    const json& j_;
    std::string pointer_;
    std::set<std::string> seen_;
};

template <class F>
auto at(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(where, e.what());
    }
}

SolverConfig parse_solver_config(const json& j, const std::string& pointer) {
    SolverConfig c;
    ObjectReader r(j, pointer);
    r.integer("max_outer_iters", c.max_outer_iters);
    r.integer("max_inner_iters", c.max_inner_iters);
    r.number("outer_tol", c.outer_tol);
    r.number("inner_tol", c.inner_tol);
    r.number("lqa_epsilon", c.lqa_epsilon);
    r.number("bessel_delta", c.bessel_delta);
    r.number("rescale_mu", c.rescale_mu);
    std::string root = c.root_solver == RootSolver::Newton ? "newton" : "bisection";
    r.string("root_solver", root);
    if (root == "newton") {
        c.root_solver = RootSolver::Newton;
    } else if (root == "bisection") {
        c.root_solver = RootSolver::Bisection;
    } else {
        throw ConfigError(r.where("root_solver"), "expected 'newton' or 'bisection'");
    }
    std::string init = c.gamma_init == GammaInit::Unit ? "unit" : "prior_mean";
    r.string("gamma_init", init);
    if (init == "unit") {
        c.gamma_init = GammaInit::Unit;
    } else if (init == "prior_mean") {
        c.gamma_init = GammaInit::PriorMean;
    } else {
        throw ConfigError(r.where("gamma_init"), "expected 'unit' or 'prior_mean'");
    }
    r.finish();
    at(pointer, [&] { c.validate(); return 0; });
    return c;
}

json solver_config_json(const SolverConfig& c) {
    return {{"max_outer_iters", c.max_outer_iters},
            {"max_inner_iters", c.max_inner_iters},
            {"outer_tol", c.outer_tol},
            {"inner_tol", c.inner_tol},
            {"lqa_epsilon", c.lqa_epsilon},
            {"bessel_delta", c.bessel_delta},
            {"rescale_mu", c.rescale_mu},
            {"root_solver", c.root_solver == RootSolver::Newton ? "newton" : "bisection"},
            {"gamma_init", c.gamma_init == GammaInit::Unit ? "unit" : "prior_mean"}};
}

SolverSpec parse_solver(const json& j, const std::string& pointer) {
    ObjectReader r(j, pointer);
    SolverSpec s;
    std::string family, optimizer;
    r.string("family", family);
    if (family.empty()) throw ConfigError(r.where("family"), "required");
    s.family = at(r.where("family"), [&] { return parse_family(family); });
    r.string("optimizer", optimizer);
    if (optimizer.empty()) {
        if (s.family == PriorFamily::WG) {
            s.optimizer = Optimizer::ClosedForm;
        } else if (s.family == PriorFamily::WL || s.family == PriorFamily::WGL) {
            s.optimizer = Optimizer::MM;
        } else {
            throw ConfigError(r.where("optimizer"), "required for conditional families");
        }
    } else {
        s.optimizer = at(r.where("optimizer"), [&] { return parse_optimizer(optimizer); });
    }
    r.number("alpha_bar", s.alpha_bar);
    r.number("s", s.s);
    std::string rule = "auto";
    r.string("beta_rule", rule);
    s.beta_rule = at(r.where("beta_rule"), [&] { return parse_beta_rule(rule); });
    r.string("label", s.label);
    r.finish();
    return s;
}

json solver_json(const SolverSpec& s) {
    json j = {{"family", to_string(s.family)},
              {"optimizer", to_string(s.optimizer)},
              {"alpha_bar", s.alpha_bar},
              {"beta_rule", to_string(s.beta_rule)}};
    if (s.family == PriorFamily::WCG_GEN) j["s"] = s.s;
    if (!s.label.empty()) j["label"] = s.label;
    return j;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    ObjectReader root(j, "");
    if (const json* h = root.find("head_model")) {
        ObjectReader r(*h, "/head_model");
        r.number("radius_mm", c.radius_mm);
        r.number("shell_min_mm", c.shell_min_mm);
        r.number("shell_max_mm", c.shell_max_mm);
        r.number("conductivity", c.conductivity);
        r.integer("n_electrodes", c.n_electrodes);
        r.number("electrode_min_z", c.electrode_min_z);
        r.finish();
    }
    if (const json* g = root.find("grid")) {
        ObjectReader r(*g, "/grid");
        r.integer("sources_per_depth", c.sources_per_depth);
        r.number("depth_max_mm", c.depth_max_mm);
        r.integer("depth_bins", c.depth_bins);
        r.number("jitter_max_mm", c.jitter_max_mm);
        r.number("source_cap_min_z", c.source_cap_min_z);
        r.integer("simulation_d", c.simulation_d);
        r.integer("reconstruction_d", c.reconstruction_d);
        r.number("moment_nAm", c.moment_nAm);
        r.finish();
    }
    root.numbers("noise_levels", c.noise_levels);
    if (const json* s = root.find("snr")) {
        ObjectReader r(*s, "/snr");
        std::string mode = "from_noise";
        r.string("mode", mode);
        if (mode == "from_noise") {
            c.snr_mode = SnrMode::FromNoise;
        } else if (mode == "from_data") {
            c.snr_mode = SnrMode::FromData;
        } else if (mode == "fixed") {
            c.snr_mode = SnrMode::Fixed;
        } else {
            throw ConfigError("/snr/mode", "expected from_noise, from_data or fixed");
        }
        r.number("value", c.snr_value);
        r.finish();
    }
    root.integer("q", c.q);
    if (const json* s = root.find("solvers")) {
        if (!s->is_array()) throw ConfigError("/solvers", "expected an array");
        for (std::size_t i = 0; i < s->size(); ++i) {
            c.solvers.push_back(parse_solver((*s)[i], "/solvers/" + std::to_string(i)));
        }
    }
    if (const json* s = root.find("solver_config")) c.solver_config = parse_solver_config(*s, "/solver_config");
    if (const json* e = root.find("evaluation")) {
        ObjectReader r(*e, "/evaluation");
        std::string mass = c.emd_squared ? "squared" : "amplitude";
        r.string("mass", mass);
        if (mass != "amplitude" && mass != "squared") {
            throw ConfigError("/evaluation/mass", "expected 'amplitude' or 'squared'");
        }
        c.emd_squared = mass == "squared";
        r.number("threshold", c.emd_threshold);
        r.finish();
    }
    root.integer("master_seed", c.master_seed);
    root.string("output_dir", c.output_dir);
    root.finish();
    c.validate();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json solvers = json::array();
    for (const auto& s : c.solvers) solvers.push_back(solver_json(s));
    const char* mode = c.snr_mode == SnrMode::FromNoise ? "from_noise"
                       : c.snr_mode == SnrMode::FromData ? "from_data"
                                                          : "fixed";
    json snr = {{"mode", mode}};
    if (c.snr_mode == SnrMode::Fixed) snr["value"] = c.snr_value;
    return {{"head_model",
             {{"radius_mm", c.radius_mm},
              {"shell_min_mm", c.shell_min_mm},
              {"shell_max_mm", c.shell_max_mm},
              {"conductivity", c.conductivity},
              {"n_electrodes", c.n_electrodes},
              {"electrode_min_z", c.electrode_min_z}}},
            {"grid",
             {{"sources_per_depth", c.sources_per_depth},
              {"depth_max_mm", c.depth_max_mm},
              {"depth_bins", c.depth_bins},
              {"jitter_max_mm", c.jitter_max_mm},
              {"source_cap_min_z", c.source_cap_min_z},
              {"simulation_d", c.simulation_d},
              {"reconstruction_d", c.reconstruction_d},
              {"moment_nAm", c.moment_nAm}}},
            {"noise_levels", c.noise_levels},
            {"snr", snr},
            {"q", c.q},
            {"solvers", solvers},
            {"solver_config", solver_config_json(c.solver_config)},
            {"evaluation",
             {{"mass", c.emd_squared ? "squared" : "amplitude"}, {"threshold", c.emd_threshold}}},
            {"master_seed", c.master_seed},
            {"output_dir", c.output_dir}};
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open config");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const ConfigError& e) {
        std::string what = e.what();
        if (!e.where().empty()) what = what.substr(e.where().size() + 2);
        throw ConfigError(path.string() + "#" + e.where(), what);
    }
}

void ExperimentConfig::validate() const {
    at("/head_model", [&] { head_model().validate(); return 0; });
    if (sources_per_depth < 1) throw ConfigError("/grid/sources_per_depth", "must be >= 1");
    if (depth_bins < 1) throw ConfigError("/grid/depth_bins", "must be >= 1");
    if (!(depth_max_mm > 0.0) || depth_max_mm > shell_max_mm - shell_min_mm) {
        throw ConfigError("/grid/depth_max_mm", "must lie in (0, shell thickness]");
    }
    if (!(jitter_max_mm > 0.0)) throw ConfigError("/grid/jitter_max_mm", "must be positive");
    if (!(source_cap_min_z >= -1.0 && source_cap_min_z < 1.0)) {
        throw ConfigError("/grid/source_cap_min_z", "must lie in [-1, 1)");
    }
    if (simulation_d < 1 || simulation_d > 3) throw ConfigError("/grid/simulation_d", "must be 1, 2 or 3");
    if (reconstruction_d < 1 || reconstruction_d > 3) {
        throw ConfigError("/grid/reconstruction_d", "must be 1, 2 or 3");
    }
    if (!(moment_nAm > 0.0)) throw ConfigError("/grid/moment_nAm", "must be positive");
    if (noise_levels.empty()) throw ConfigError("/noise_levels", "at least one noise level required");
    for (std::size_t i = 0; i < noise_levels.size(); ++i) {
        if (!(noise_levels[i] >= 0.0)) {
            throw ConfigError("/noise_levels/" + std::to_string(i), "must be >= 0");
        }
    }
    if (snr_mode == SnrMode::Fixed && !(snr_value > 1.0)) {
        throw ConfigError("/snr/value", "fixed snr must exceed 1");
    }
    if (q < 1) throw ConfigError("/q", "must be >= 1");
    if (solvers.empty()) throw ConfigError("/solvers", "at least one solver required");
    std::set<std::string> names;
    for (std::size_t i = 0; i < solvers.size(); ++i) {
        const std::string where = "/solvers/" + std::to_string(i);
        const SolverSpec& s = solvers[i];
        PriorSpec p;
        p.family = s.family;
        p.optimizer = s.optimizer;
        p.d = reconstruction_d;
        p.alpha_bar = s.alpha_bar > 0.0 ? s.alpha_bar : default_alpha_bar(s.family, reconstruction_d);
        p.s = s.family == PriorFamily::WCG_GA ? 1.0 : s.family == PriorFamily::WCG_IG ? -1.0 : s.s;
        at(where, [&] { p.validate(); return 0; });
        if (!names.insert(s.name()).second) {
            throw ConfigError(where, "duplicate solver name '" + s.name() + "'; set a label");
        }
    }
    at("/solver_config", [&] { solver_config.validate(); return 0; });
    if (!(emd_threshold >= 0.0 && emd_threshold < 1.0)) {
        throw ConfigError("/evaluation/threshold", "must lie in [0, 1)");
    }
}

SphereHeadModel ExperimentConfig::head_model() const {
    SphereHeadModel m;
    m.radius_mm = radius_mm;
    m.shell_min_mm = shell_min_mm;
    m.shell_max_mm = shell_max_mm;
    m.conductivity = conductivity;
    if (n_electrodes < 1) throw ConfigError("/head_model/n_electrodes", "must be >= 3");
    m.electrode_directions = SphereHeadModel::cap_electrodes(n_electrodes, electrode_min_z);
    return m;
}

std::vector<std::pair<double, double>> ExperimentConfig::bins() const {
    return SimulationConfig::uniform_bins(depth_max_mm, depth_bins);
}

SimulationConfig ExperimentConfig::simulation_config() const {
    SimulationConfig s;
    s.n_sources_per_depth = sources_per_depth;
    s.depth_bins = bins();
    s.rng_seed = mix_seed(master_seed, {0});
    s.grid_jitter_max_mm = jitter_max_mm;
    s.source_cap_min_z = source_cap_min_z;
    return s;
}

std::string ExperimentConfig::hash() const {
    json j = config_to_json(*this);
    j.erase("output_dir");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig ExperimentConfig::desk_scale() {
    ExperimentConfig c;
    auto add = [&c](PriorFamily f, Optimizer o) { c.solvers.push_back({f, o, 0.0, 1.0, BetaRule::Auto, ""}); };
    add(PriorFamily::WCG_GA, Optimizer::EM);
    add(PriorFamily::WCG_GA, Optimizer::IAS);
    add(PriorFamily::WCG_IG, Optimizer::EM);
    add(PriorFamily::WCG_IG, Optimizer::IAS);
    add(PriorFamily::WCGL, Optimizer::EM);
    add(PriorFamily::WCGL, Optimizer::IAS);
    add(PriorFamily::WCL, Optimizer::EM);
    add(PriorFamily::WCL, Optimizer::IAS);
    add(PriorFamily::WGL, Optimizer::MM);
    add(PriorFamily::WL, Optimizer::MM);
    add(PriorFamily::WG, Optimizer::ClosedForm);
    c.solver_config.max_outer_iters = 50;
    c.solver_config.max_inner_iters = 30;
    c.solver_config.outer_tol = 1e-4;
    c.solver_config.inner_tol = 1e-6;
    c.solver_config.gamma_init = GammaInit::PriorMean;
    c.master_seed = 20250101;
    return c;
}

// ------------------------------------------------------------------ results CSV

const std::string& results_header() {
    static const std::string h =
        "trial_id,solver,noise_percent,source_index,depth_true_mm,recon_index,depth_recon_mm,"
        "depth_error_mm,emd_mm,iterations,status,seed,config_hash,version";
    return h;
}

std::string to_csv_row(const TrialResult& r) {
    std::ostringstream s;
    s << r.trial_id << ',' << r.solver << ',' << io::format_double(r.noise_percent) << ','
      << r.source_index << ',' << io::format_double(r.depth_true_mm) << ',' << r.recon_index << ','
      << io::format_double(r.depth_recon_mm) << ',' << io::format_double(r.depth_error_mm) << ','
      << io::format_double(r.emd_mm) << ',' << r.iterations << ',' << r.status << ',' << r.seed
      << ',' << r.config_hash << ',' << r.version;
    return s.str();
}

namespace {

double to_double(const std::string& s, const std::string& where) {
    return io::parse_double(s, where);
}

long long to_int(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(where, "not an integer: '" + s + "'");
}

std::uint64_t to_u64(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(where, "not an unsigned integer: '" + s + "'");
}

}  // namespace

TrialResult parse_csv_row(const std::string& line, const std::string& where) {
    const auto f = io::split_csv_line(line);
    if (f.size() < 14) throw ConfigError(where, "expected 14 columns");
    TrialResult r;
    r.trial_id = to_int(f[0], where);
    r.solver = f[1];
    r.noise_percent = to_double(f[2], where);
    r.source_index = to_int(f[3], where);
    r.depth_true_mm = to_double(f[4], where);
    r.recon_index = to_int(f[5], where);
    r.depth_recon_mm = to_double(f[6], where);
    r.depth_error_mm = to_double(f[7], where);
    r.emd_mm = to_double(f[8], where);
    r.iterations = static_cast<int>(to_int(f[9], where));
    r.status = f[10];
    r.seed = to_u64(f[11], where);
    r.config_hash = f[12];
    r.version = f[13];
    if (f.size() > 14) r.runtime_s = to_double(f[14], where);
    return r;
}

void write_results_csv(const fs::path& path, const std::vector<TrialResult>& rows) {
    std::ostringstream s;
    s << results_header() << '\n';
    for (const auto& r : rows) s << to_csv_row(r) << '\n';
    io::write_text_atomic(path, s.str());
}

std::vector<TrialResult> read_results_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open for reading");
    std::string line;
    if (!std::getline(in, line) || line.rfind(results_header(), 0) != 0) {
        throw ConfigError(path.string() + ":1", "unexpected results header");
    }
    std::vector<TrialResult> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        rows.push_back(parse_csv_row(line, path.string() + ":" + std::to_string(lineno)));
    }
    return rows;
}

// ------------------------------------------------------------------ sweep

namespace {

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

struct Study {
    const ExperimentConfig& config;
    DualGrids grids;
    LeadField sim_field;
    LeadField recon_field;
    std::string hash;
};

struct ItemKey {
    std::size_t noise;
    Index trial;
};

std::uint64_t trial_seed(const ExperimentConfig& c, const ItemKey& key) {
    return mix_seed(c.master_seed, {1, static_cast<std::uint64_t>(key.trial),
                                    static_cast<std::uint64_t>(key.noise)});
}

// Radial moment of the configured amplitude in the simulation basis.
Vector trial_moment(const Study& s, Index k) {
    const Eigen::Vector3d radial = s.grids.simulation.position(k).normalized();
    Vector m = s.grids.simulation.basis(k) * radial * s.config.moment_nAm;
    if (m.norm() < 1e-12 * s.config.moment_nAm) {
        m = Vector::Zero(s.grids.simulation.d());
        m[0] = s.config.moment_nAm;
    }
    return m;
}

std::vector<TrialResult> run_item(const Study& s, const ItemKey& key) {
    const ExperimentConfig& c = s.config;
    const double p = c.noise_levels[key.noise];
    const std::uint64_t seed = trial_seed(c, key);
    const SimulatedMeasurement sim =
        simulate_measurement(s.sim_field, key.trial, trial_moment(s, key.trial), p, seed);
    const WhitenedProblem problem = whiten(s.recon_field, sim.measurement);
    double snr = 0.0;
    switch (c.snr_mode) {
        case SnrMode::FromNoise: snr = p > 0.0 ? 1.0 + 1.0 / (p * p) : snr_from_data(sim.measurement); break;
        case SnrMode::FromData: snr = snr_from_data(sim.measurement); break;
        case SnrMode::Fixed: snr = c.snr_value; break;
    }
    const SnrContext ctx{snr, c.q, problem.noise_trace, s.recon_field.block_norms_sq()};
    const Eigen::Vector3d truth = s.grids.simulation.position(key.trial);
    const double depth_true = s.grids.simulation.depths()[key.trial];

    std::vector<TrialResult> rows;
    for (const SolverSpec& spec : c.solvers) {
        TrialResult r;
        r.trial_id = key.trial;
        r.solver = spec.name();
        r.noise_percent = p;
        r.source_index = key.trial;
        r.depth_true_mm = depth_true;
        r.seed = seed;
        r.config_hash = s.hash;
        r.version = version_string();
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const PriorSpec prior = make_prior(spec.family, spec.optimizer, ctx, c.reconstruction_d,
                                               spec.alpha_bar, spec.s, spec.beta_rule);
            const SolveResult res = solve(prior, problem, c.solver_config);
            r.recon_index = index_of_max(res.estimate);
            r.depth_recon_mm = s.grids.reconstruction.depths()[r.recon_index];
            r.depth_error_mm = std::abs(r.depth_recon_mm - depth_true);
            const MassDistribution mass = MassDistribution::from_estimate(
                res.estimate, s.grids.reconstruction, c.emd_squared, c.emd_threshold);
            r.emd_mm = emd_single_truth(mass, truth);
            r.iterations = res.trace.iterations;
            r.status = to_string(res.trace.status);
        } catch (const Error& e) {
            r.recon_index = -1;
            r.depth_recon_mm = r.depth_error_mm = r.emd_mm = std::nan("");
            r.status = "error:" + sanitize(e.what());
        }
        r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows.push_back(std::move(r));
    }
    return rows;
}

fs::path item_path(const fs::path& dir, const ItemKey& key) {
    return dir / ("n" + std::to_string(key.noise) + "_t" + std::to_string(key.trial) + ".csv");
}

bool load_item(const fs::path& path, const Study& s, std::vector<TrialResult>& rows) {
    std::ifstream in(path);
    if (!in) return false;
    std::string line;
    if (!std::getline(in, line) || line != results_header() + ",runtime_s") return false;
    std::vector<TrialResult> loaded;
    try {
        while (std::getline(in, line)) {
            if (!line.empty()) loaded.push_back(parse_csv_row(line, path.string()));
        }
    } catch (const ConfigError&) {
        return false;
    }
    if (loaded.size() != s.config.solvers.size()) return false;
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        if (loaded[i].config_hash != s.hash || loaded[i].solver != s.config.solvers[i].name() ||
            loaded[i].version != version_string()) {
            return false;
        }
    }
    rows = std::move(loaded);
    return true;
}

void save_item(const fs::path& path, const std::vector<TrialResult>& rows) {
    std::ostringstream out;
    out << results_header() << ",runtime_s\n";
    for (const auto& r : rows) out << to_csv_row(r) << ',' << io::format_double(r.runtime_s) << '\n';
    io::write_text_atomic(path, out.str());
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config, const ExperimentOptions& options) {
    config.validate();
    if (options.threads > 0) kernels::set_thread_count(options.threads);

    const SphereHeadModel model = config.head_model();
    DualGrids grids = make_dual_grids(model, config.simulation_config(), config.simulation_d,
                                      config.reconstruction_d);
    LeadField sim_field = build_sphere_leadfield(model, grids.simulation);
    LeadField recon_field = build_sphere_leadfield(model, grids.reconstruction);
    const Study study{config, std::move(grids), std::move(sim_field), std::move(recon_field),
                      config.hash()};

    const fs::path out_dir = config.output_dir;
    const fs::path trial_dir = out_dir / "trials";
    if (options.write_files) {
        fs::create_directories(trial_dir);
        json resolved = config_to_json(config);
        resolved["config_hash"] = study.hash;
        resolved["version"] = version_string();
        io::write_text_atomic(out_dir / "config.json", resolved.dump(2) + "\n");
    }

    std::vector<ItemKey> items;
    for (std::size_t j = 0; j < config.noise_levels.size(); ++j) {
        for (Index i = 0; i < study.grids.simulation.n(); ++i) items.push_back({j, i});
    }
    const auto count = static_cast<std::ptrdiff_t>(items.size());
    std::vector<std::vector<TrialResult>> results(items.size());
    std::vector<char> resumed(items.size(), 0);
    std::atomic<std::size_t> done{0};
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t it = 0; it < count; ++it) {
        try {
            const ItemKey key = items[static_cast<std::size_t>(it)];
            const fs::path path = item_path(trial_dir, key);
            auto& rows = results[static_cast<std::size_t>(it)];
            if (options.write_files && options.resume && load_item(path, study, rows)) {
                resumed[static_cast<std::size_t>(it)] = 1;
            } else {
                rows = run_item(study, key);
                if (options.write_files) save_item(path, rows);
            }
            const std::size_t finished = ++done;
            if (options.progress) {
#pragma omp critical(besi_progress)
                options.progress(finished, items.size());
            }
        } catch (...) {
#pragma omp critical(besi_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentOutput out;
    for (std::size_t it = 0; it < items.size(); ++it) {
        (resumed[it] ? out.resumed_items : out.computed_items) += 1;
        for (auto& r : results[it]) out.rows.push_back(std::move(r));
    }

    if (options.write_files) {
        write_results_csv(out_dir / "results.csv", out.rows);
        std::ostringstream timings;
        timings << "trial_id,solver,noise_percent,runtime_s\n";
        for (const auto& r : out.rows) {
            timings << r.trial_id << ',' << r.solver << ',' << io::format_double(r.noise_percent)
                    << ',' << io::format_double(r.runtime_s) << '\n';
        }
        io::write_text_atomic(out_dir / "timings.csv", timings.str());
        std::vector<io::GroundTruthRow> truth;
        for (const ItemKey& key : items) {
            truth.push_back({static_cast<std::int64_t>(key.trial), static_cast<std::int64_t>(key.trial),
                             study.grids.simulation.depths()[key.trial], trial_moment(study, key.trial),
                             config.noise_levels[key.noise], trial_seed(config, key)});
        }
        io::write_ground_truth_csv(out_dir / "ground_truth.csv", truth);
    }
    return out;
}

// ------------------------------------------------------------------ report

Report build_report(const std::vector<TrialResult>& rows,
                    const std::vector<std::pair<double, double>>& bins) {
    if (rows.empty()) throw ConstraintError("report: empty results set");
    Report report;
    report.bins = bins;
    std::map<std::pair<std::string, double>, std::vector<const TrialResult*>> grouped;
    for (const auto& r : rows) {
        if (std::find(report.solver_order.begin(), report.solver_order.end(), r.solver) ==
            report.solver_order.end()) {
            report.solver_order.push_back(r.solver);
        }
        if (std::find(report.noise_order.begin(), report.noise_order.end(), r.noise_percent) ==
            report.noise_order.end()) {
            report.noise_order.push_back(r.noise_percent);
        }
        grouped[{r.solver, r.noise_percent}].push_back(&r);
    }
    std::sort(report.noise_order.begin(), report.noise_order.end());

    auto bin_of = [&bins](double depth) -> std::ptrdiff_t {
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const bool last = b + 1 == bins.size();
            if (depth >= bins[b].first && (depth < bins[b].second || (last && depth <= bins[b].second))) {
                return static_cast<std::ptrdiff_t>(b);
            }
        }
        return -1;
    };

    for (const auto& [key, members] : grouped) {
        GroupReport g;
        std::vector<double> emds, td, rd;
        std::vector<std::vector<double>> per_bin(bins.size());
        std::vector<DepthErrorRecord> errors;
        for (const TrialResult* r : members) {
            if (!r->ok()) {
                ++g.failures;
                continue;
            }
            emds.push_back(r->emd_mm);
            td.push_back(r->depth_true_mm);
            rd.push_back(r->depth_recon_mm);
            errors.push_back({key.first, r->depth_error_mm});
            const auto b = bin_of(r->depth_true_mm);
            if (b >= 0) per_bin[static_cast<std::size_t>(b)].push_back(r->emd_mm);
        }
        if (!emds.empty()) g.emd = summarize(emds);
        for (const auto& v : per_bin) {
            g.emd_by_bin.push_back(v.empty() ? Summary{} : summarize(v));
            g.mean_emd_by_bin.push_back(v.empty() ? std::nan("") : g.emd_by_bin.back().mean);
        }
        try {
            g.regression = depth_regression(td, rd);
            g.regression_valid = true;
        } catch (const Error&) {
            g.regression_valid = false;
        }
        if (!errors.empty()) g.depth_error_percent = depth_error_bins(errors).percent.at(key.first);
        report.groups[key] = std::move(g);
    }
    return report;
}

void write_report(const Report& report, const std::vector<TrialResult>& rows, const fs::path& dir) {
    fs::create_directories(dir);
    const auto f = [](double v) { return io::format_double(v); };
    std::ostringstream depth, summary, dist, scatter, reg, errs;
    depth << "solver,noise_percent,bin_low_mm,bin_high_mm,count,mean_emd_mm,median_emd_mm\n";
    summary << "solver,noise_percent,depth_bin,count,median,std,iqr,mean\n";
    reg << "solver,noise_percent,count,slope,intercept,slope_ci_low,slope_ci_high,"
           "intercept_ci_low,intercept_ci_high\n";
    // bin labels carry commas, so the CSV uses plain column names
    errs << "solver,noise_percent,count,pct_gt20,pct_15_20,pct_10_15,pct_5_10,pct_1_5,pct_le1\n";
    json js = {{"bins", json::array()}, {"groups", json::array()}};
    for (const auto& [lo, hi] : report.bins) js["bins"].push_back({lo, hi});

    for (double noise : report.noise_order) {
        for (const std::string& solver : report.solver_order) {
            const auto it = report.groups.find({solver, noise});
            if (it == report.groups.end()) continue;
            const GroupReport& g = it->second;
            const std::string head = solver + "," + f(noise);
            summary << head << ",all," << g.emd.count << ',' << f(g.emd.median) << ','
                    << f(g.emd.std) << ',' << f(g.emd.iqr) << ',' << f(g.emd.mean) << '\n';
            json bins = json::array();
            for (std::size_t b = 0; b < report.bins.size(); ++b) {
                const Summary& s = g.emd_by_bin[b];
                const auto [lo, hi] = report.bins[b];
                depth << head << ',' << f(lo) << ',' << f(hi) << ',' << s.count << ','
                      << f(g.mean_emd_by_bin[b]) << ',' << f(s.count ? s.median : std::nan(""))
                      << '\n';
                summary << head << ',' << f(lo) << '-' << f(hi) << ',' << s.count << ','
                        << f(s.median) << ',' << f(s.std) << ',' << f(s.iqr) << ',' << f(s.mean)
                        << '\n';
                bins.push_back({{"count", s.count},
                                {"mean", s.count ? json(s.mean) : json(nullptr)},
                                {"median", s.count ? json(s.median) : json(nullptr)},
                                {"std", s.std},
                                {"iqr", s.iqr}});
            }
            const Regression& r = g.regression;
            if (g.regression_valid) {
                reg << head << ',' << r.count << ',' << f(r.slope) << ',' << f(r.intercept) << ','
                    << f(r.slope_ci_low) << ',' << f(r.slope_ci_high) << ','
                    << f(r.intercept_ci_low) << ',' << f(r.intercept_ci_high) << '\n';
            }
            errs << head << ',' << g.emd.count;
            for (double p : g.depth_error_percent) errs << ',' << f(p);
            errs << '\n';
            json group = {{"solver", solver},
                          {"noise_percent", noise},
                          {"count", g.emd.count},
                          {"failures", g.failures},
                          {"emd", {{"median", g.emd.median}, {"std", g.emd.std}, {"iqr", g.emd.iqr},
                                   {"mean", g.emd.mean}}},
                          {"emd_by_depth_bin", bins},
                          {"depth_error_percent", json::object()}};
            for (std::size_t b = 0; b < kDepthErrorBins.size(); ++b) {
                group["depth_error_percent"][kDepthErrorBins[b]] = g.depth_error_percent[b];
            }
            if (g.regression_valid) {
                group["regression"] = {{"slope", r.slope},
                                       {"intercept", r.intercept},
                                       {"slope_ci95", {r.slope_ci_low, r.slope_ci_high}},
                                       {"intercept_ci95", {r.intercept_ci_low, r.intercept_ci_high}}};
            }
            js["groups"].push_back(group);
        }
    }
    dist << "solver,noise_percent,trial_id,emd_mm\n";
    scatter << "solver,noise_percent,trial_id,depth_true_mm,depth_recon_mm\n";
    for (const auto& r : rows) {
        if (!r.ok()) continue;
        dist << r.solver << ',' << f(r.noise_percent) << ',' << r.trial_id << ',' << f(r.emd_mm) << '\n';
        scatter << r.solver << ',' << f(r.noise_percent) << ',' << r.trial_id << ','
                << f(r.depth_true_mm) << ',' << f(r.depth_recon_mm) << '\n';
    }
    io::write_text_atomic(dir / "emd_vs_depth.csv", depth.str());
    io::write_text_atomic(dir / "emd_summary.csv", summary.str());
    io::write_text_atomic(dir / "emd_distribution.csv", dist.str());
    io::write_text_atomic(dir / "depth_scatter.csv", scatter.str());
    io::write_text_atomic(dir / "depth_regression.csv", reg.str());
    io::write_text_atomic(dir / "depth_error_bins.csv", errs.str());
    io::write_text_atomic(dir / "summary.json", js.dump(2) + "\n");
}

}  // namespace besi
