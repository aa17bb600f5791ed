#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "besi/types.hpp"

namespace besi {

/// Homogeneous conducting sphere with electrodes on its surface.
///
/// Lengths in millimetres, conductivity in S/m. Sources live in the shell
/// shell_min_mm <= |r| <= shell_max_mm; depth is shell_max_mm - |r|.
struct SphereHeadModel {
    double radius_mm = 92.0;
    double shell_min_mm = 40.0;
    double shell_max_mm = 70.0;
    double conductivity = 0.33;
    Matrix electrode_directions = Matrix(0, 3);  // m x 3 unit rows

    /// Throws GeometryError unless 0 < shell_min <= shell_max < radius,
    /// m >= 3 and every electrode direction is unit length.
    void validate() const;

    Index m() const noexcept { return electrode_directions.rows(); }

    /// Quasi-uniform (Fibonacci) electrode layout on the cap z >= min_z.
    static Matrix cap_electrodes(Index m, double min_z);
};

/// Parameters of a depth-stratified simulation grid.
struct SimulationConfig {
    Index n_sources_per_depth = 30;
    std::vector<std::pair<double, double>> depth_bins;  // [lo, hi) in mm
    double noise_percent = 0.05;                         // fraction, 0.05 = 5 %
    std::uint64_t rng_seed = 1;
    double grid_jitter_max_mm = 3.0;
    double source_cap_min_z = 0.0;  // source directions restricted to z >= this

    void validate() const;

    /// `count` equal bins spanning [0, max_depth_mm].
    static std::vector<std::pair<double, double>> uniform_bins(double max_depth_mm, Index count);
};

/// Local orientation basis at a position: d=1 radial, d=2 two tangential
/// directions, d=3 the Cartesian axes. Throws GeometryError at the centre
/// for d < 3.
Matrix orientation_basis(const Eigen::Vector3d& position, Index d);

/// Builds a SourceSpace on the sphere model's shell from raw positions.
SourceSpace make_sphere_source_space(const SphereHeadModel& model, const Matrix& positions, Index d);

/// Average-referenced surface potential of unit dipoles in a homogeneous
/// sphere. Units: microvolts per nA*m.
LeadField build_sphere_leadfield(const SphereHeadModel& model, const SourceSpace& space);

/// Potential at electrode position `electrode_mm` (on the surface) of dipole
/// `moment` (A*m) at `source_mm`, in volts, no reference applied.
double sphere_dipole_potential(const Eigen::Vector3d& electrode_mm, const Eigen::Vector3d& source_mm,
                               const Eigen::Vector3d& moment, double radius_mm, double conductivity);

/// Random Gaussian blocks scaled by (depth + 1)^(-decay). Depths default to
/// an even spread over [0, 30] mm.
std::pair<LeadField, SourceSpace> build_synthetic_leadfield(Index m, Index n, Index d, double decay,
                                                            std::uint64_t seed);
std::pair<LeadField, SourceSpace> build_synthetic_leadfield(Index m, const Vector& depths, Index d,
                                                            double decay, std::uint64_t seed);

/// Simulation and reconstruction grids that never share a position.
struct DualGrids {
    SourceSpace simulation;
    SourceSpace reconstruction;
    std::vector<Index> nearest;          // sim index -> nearest recon index
    std::vector<double> nearest_distance;  // mm
};

DualGrids make_dual_grids(const SphereHeadModel& model, const SimulationConfig& config,
                          Index simulation_d, Index reconstruction_d);

struct GroundTruth {
    Index source_index = 0;
    Vector moment;  // d coefficients in the source's orientation basis
    double noise_percent = 0.0;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
};

struct SimulatedMeasurement {
    Measurement measurement;
    GroundTruth truth;
};

/// y = L x_true + xi with xi ~ N(0, sigma^2 I),
/// sigma = noise_percent * ||L x_true||_2 / sqrt(m). The returned noise model
/// carries sigma^2 I (a tiny floor replaces sigma = 0 so it stays SPD).
SimulatedMeasurement simulate_measurement(const LeadField& lead_field, Index true_index,
                                          const Vector& moment, double noise_percent,
                                          std::uint64_t seed);

/// trace(L Cov[x] L^T) / trace(Gamma) + 1.
double empirical_snr(const LeadField& lead_field, const Matrix& source_covariance,
                     const NoiseModel& noise);
/// Same with Cov[x] = x x^T for a deterministic source.
double empirical_snr(const LeadField& lead_field, const Vector& x_true, const NoiseModel& noise);

/// Expands a single-block moment into a full dn coefficient vector.
Vector embed_block(Index n, Index d, Index k, const Vector& moment);

}  // namespace besi
