#include "besi/forward.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "besi/error.hpp"
#include "besi/kernels.hpp"
#include "besi/rng.hpp"

namespace besi {

void SphereHeadModel::validate() const {
    if (!(shell_min_mm > 0.0 && shell_min_mm <= shell_max_mm && shell_max_mm < radius_mm)) {
        throw GeometryError("sphere model: require 0 < shell_min <= shell_max < radius");
    }
    if (!(conductivity > 0.0)) throw GeometryError("sphere model: conductivity must be > 0");
    if (m() < 3) throw GeometryError("sphere model: at least 3 electrodes are required");
    if (electrode_directions.cols() != 3) {
        throw GeometryError("sphere model: electrode directions must be m x 3");
    }
    for (Index e = 0; e < m(); ++e) {
        if (std::abs(electrode_directions.row(e).norm() - 1.0) > 1e-9) {
            throw GeometryError("sphere model: electrode " + std::to_string(e) +
                                " direction is not unit length");
        }
    }
}

Matrix SphereHeadModel::cap_electrodes(Index m, double min_z) {
    if (m < 1 || !(min_z >= -1.0 && min_z < 1.0)) {
        throw GeometryError("cap_electrodes: need m >= 1 and -1 <= min_z < 1");
    }
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    Matrix dirs(m, 3);
    for (Index i = 0; i < m; ++i) {
        const double z = 1.0 - (1.0 - min_z) * (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i);
        dirs.row(i) << rho * std::cos(phi), rho * std::sin(phi), z;
        dirs.row(i).normalize();
    }
    return dirs;
}

void SimulationConfig::validate() const {
    if (n_sources_per_depth < 0) throw ConstraintError("simulation: n_sources_per_depth < 0");
    if (!(noise_percent >= 0.0)) throw ConstraintError("simulation: noise_percent must be >= 0");
    if (!(grid_jitter_max_mm > 0.0)) throw ConstraintError("simulation: jitter bound must be > 0");
    for (const auto& [lo, hi] : depth_bins) {
        if (!(lo >= 0.0 && hi > lo)) {
            throw ConstraintError("simulation: depth bin [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + ") is empty or negative");
        }
    }
}

std::vector<std::pair<double, double>> SimulationConfig::uniform_bins(double max_depth_mm, Index count) {
    std::vector<std::pair<double, double>> bins;
    for (Index b = 0; b < count; ++b) {
        bins.emplace_back(max_depth_mm * static_cast<double>(b) / static_cast<double>(count),
                          max_depth_mm * static_cast<double>(b + 1) / static_cast<double>(count));
    }
    return bins;
}

Matrix orientation_basis(const Eigen::Vector3d& position, Index d) {
    if (d == 3) return Matrix::Identity(3, 3);
    const double r = position.norm();
    if (r < 1e-12) {
        throw GeometryError("orientation basis undefined at the sphere centre for d < 3");
    }
    const Eigen::Vector3d radial = position / r;
    if (d == 1) return radial.transpose();
    if (d != 2) throw ShapeError("orientation_basis: d must be 1, 2 or 3");
    const Eigen::Vector3d helper =
        std::abs(radial.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
    const Eigen::Vector3d t1 = (helper - helper.dot(radial) * radial).normalized();
    const Eigen::Vector3d t2 = radial.cross(t1);
    Matrix basis(2, 3);
    basis.row(0) = t1.transpose();
    basis.row(1) = t2.transpose();
    return basis;
}

SourceSpace make_sphere_source_space(const SphereHeadModel& model, const Matrix& positions, Index d) {
    const Index n = positions.rows();
    Vector depths(n);
    Matrix orientation(n * d, 3);
    for (Index k = 0; k < n; ++k) {
        const Eigen::Vector3d p = positions.row(k).transpose();
        const double r = p.norm();
        if (!(r < model.radius_mm)) {
            throw GeometryError("source " + std::to_string(k) + " lies outside the sphere");
        }
        if (r > model.shell_max_mm + 1e-9) {
            throw GeometryError("source " + std::to_string(k) + " lies above the source shell");
        }
        depths[k] = std::max(0.0, model.shell_max_mm - r);
        orientation.middleRows(k * d, d) = orientation_basis(p, d);
    }
    return SourceSpace(positions, depths, orientation, d);
}

double sphere_dipole_potential(const Eigen::Vector3d& electrode_mm, const Eigen::Vector3d& source_mm,
                               const Eigen::Vector3d& moment, double radius_mm, double conductivity) {
    const Eigen::Vector3d r = electrode_mm * 1e-3;
    const Eigen::Vector3d r0 = source_mm * 1e-3;
    const double radius = radius_mm * 1e-3;
    const Eigen::Vector3d dv = r - r0;
    const double dist = dv.norm();
    const double direct = 2.0 * dv.dot(moment) / (dist * dist * dist);
    const double boundary =
        (r + radius * dv / dist).dot(moment) / (radius * (radius * dist + r.dot(dv)));
    return (direct + boundary) / (4.0 * std::numbers::pi * conductivity);
}

LeadField build_sphere_leadfield(const SphereHeadModel& model, const SourceSpace& space) {
    model.validate();
    for (Index k = 0; k < space.n(); ++k) {
        if (!(space.position(k).norm() < model.radius_mm)) {
            throw GeometryError("source " + std::to_string(k) + " lies outside the sphere");
        }
    }
    Matrix entries = kernels::sphere_leadfield_omp(model, space);
    kernels::average_reference(entries);
    return LeadField(std::move(entries), space.d());
}

std::pair<LeadField, SourceSpace> build_synthetic_leadfield(Index m, Index n, Index d, double decay,
                                                            std::uint64_t seed) {
    if (n < 1) throw ConstraintError("synthetic lead field: n must be positive");
    Vector depths(n);
    for (Index k = 0; k < n; ++k) {
        depths[k] = n == 1 ? 0.0 : 30.0 * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    return build_synthetic_leadfield(m, depths, d, decay, seed);
}

std::pair<LeadField, SourceSpace> build_synthetic_leadfield(Index m, const Vector& depths, Index d,
                                                            double decay, std::uint64_t seed) {
    const Index n = depths.size();
    if (m < 1 || n < 1 || d < 1 || d > 3) {
        throw ConstraintError("synthetic lead field: m, n positive and d in {1,2,3} required");
    }
    constexpr double kShellMax = 70.0;
    Rng rng(seed);
    Matrix entries(m, n * d);
    Matrix positions(n, 3);
    Matrix orientation(n * d, 3);
    for (Index k = 0; k < n; ++k) {
        if (!(depths[k] >= 0.0 && depths[k] < kShellMax)) {
            throw ConstraintError("synthetic lead field: depth out of [0, 70) mm");
        }
        const double scale = std::pow(depths[k] + 1.0, -decay);
        for (Index c = 0; c < d; ++c) {
            for (Index i = 0; i < m; ++i) entries(i, k * d + c) = scale * rng.normal();
        }
        positions.row(k) = (rng.unit_vector() * (kShellMax - depths[k])).transpose();
        orientation.middleRows(k * d, d) = Matrix::Identity(d, 3);
    }
    return {LeadField(std::move(entries), d), SourceSpace(positions, depths, orientation, d)};
}

namespace {

Eigen::Vector3d cap_direction(Rng& rng, double min_z) {
    for (;;) {
        const Eigen::Vector3d u = rng.unit_vector();
        if (u.z() >= min_z) return u;
    }
}

}  // namespace

DualGrids make_dual_grids(const SphereHeadModel& model, const SimulationConfig& config,
                          Index simulation_d, Index reconstruction_d) {
    model.validate();
    config.validate();
    if (!(config.source_cap_min_z < 1.0)) throw ConstraintError("simulation: source cap is empty");
    const double thickness = model.shell_max_mm - model.shell_min_mm;
    for (const auto& [lo, hi] : config.depth_bins) {
        if (hi > thickness + 1e-12) {
            throw ConstraintError("simulation: depth bin upper edge " + std::to_string(hi) +
                                  " mm exceeds the source shell thickness");
        }
    }

    const Index per_bin = config.n_sources_per_depth;
    const Index total = per_bin * static_cast<Index>(config.depth_bins.size());
    Matrix recon(total, 3);
    Matrix sim(total, 3);
    Rng rng(config.rng_seed);
    constexpr int kMaxAttempts = 10000;

    Index row = 0;
    for (std::size_t b = 0; b < config.depth_bins.size(); ++b) {
        const auto [lo, hi] = config.depth_bins[b];
        for (Index j = 0; j < per_bin; ++j, ++row) {
            const double depth = rng.uniform(lo, hi);
            const Eigen::Vector3d p = cap_direction(rng, config.source_cap_min_z) *
                                      (model.shell_max_mm - depth);
            recon.row(row) = p.transpose();

            bool placed = false;
            for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
                const double radius = config.grid_jitter_max_mm * std::cbrt(rng.uniform());
                if (radius < 1e-6) continue;
                const Eigen::Vector3d q = p + rng.unit_vector() * radius;
                const double qdepth = model.shell_max_mm - q.norm();
                if (qdepth >= lo && qdepth < hi && q != p) {
                    sim.row(row) = q.transpose();
                    placed = true;
                }
            }
            if (!placed) {
                throw ConstraintError("simulation: depth bin [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) +
                                      ") is too thin to place a jittered simulation source");
            }
        }
    }

    DualGrids grids;
    grids.reconstruction = make_sphere_source_space(model, recon, reconstruction_d);
    grids.simulation = make_sphere_source_space(model, sim, simulation_d);
    kernels::nearest_neighbours_omp(sim, recon, grids.nearest, grids.nearest_distance);
    return grids;
}

Vector embed_block(Index n, Index d, Index k, const Vector& moment) {
    if (k < 0 || k >= n) throw ShapeError("source index " + std::to_string(k) + " out of range");
    if (moment.size() != d) throw ShapeError("moment length does not match d");
    Vector x = Vector::Zero(n * d);
    x.segment(k * d, d) = moment;
    return x;
}

SimulatedMeasurement simulate_measurement(const LeadField& lead_field, Index true_index,
                                          const Vector& moment, double noise_percent,
                                          std::uint64_t seed) {
    if (!(noise_percent >= 0.0)) throw ConstraintError("simulate: noise_percent must be >= 0");
    if (!(moment.norm() > 0.0)) throw ConstraintError("simulate: zero moment");
    const Vector x = embed_block(lead_field.n(), lead_field.d(), true_index, moment);
    const Vector signal = lead_field.matrix() * x;
    const double m = static_cast<double>(lead_field.m());
    const double rms = signal.norm() / std::sqrt(m);
    if (!(rms > 0.0)) throw DegenerateInputError("simulate: source produces no signal");
    const double sigma = noise_percent * rms;

    Rng rng(seed);
    Vector values = signal;
    for (Index i = 0; i < values.size(); ++i) values[i] += sigma * rng.normal();

    const double model_sigma = sigma > 0.0 ? sigma : 1e-12 * rms;
    SimulatedMeasurement out{
        Measurement(std::move(values), NoiseModel::white(lead_field.m(), model_sigma * model_sigma)),
        GroundTruth{true_index, moment, noise_percent, seed, sigma}};
    return out;
}

double empirical_snr(const LeadField& lead_field, const Matrix& source_covariance,
                     const NoiseModel& noise) {
    const Matrix& L = lead_field.matrix();
    if (source_covariance.rows() != L.cols() || source_covariance.cols() != L.cols()) {
        throw ShapeError("empirical_snr: source covariance must be dn x dn");
    }
    if (noise.m() != L.rows()) throw ShapeError("empirical_snr: noise size != m");
    const double noise_trace = noise.trace();
    if (!(noise_trace > 0.0)) throw ConstraintError("empirical_snr: zero noise trace");
    const double signal_trace = (L * source_covariance * L.transpose()).trace();
    return signal_trace / noise_trace + 1.0;
}

double empirical_snr(const LeadField& lead_field, const Vector& x_true, const NoiseModel& noise) {
    if (x_true.size() != lead_field.matrix().cols()) throw ShapeError("empirical_snr: x length");
    if (noise.m() != lead_field.m()) throw ShapeError("empirical_snr: noise size != m");
    const double noise_trace = noise.trace();
    if (!(noise_trace > 0.0)) throw ConstraintError("empirical_snr: zero noise trace");
    return (lead_field.matrix() * x_true).squaredNorm() / noise_trace + 1.0;
}

}  // namespace besi
