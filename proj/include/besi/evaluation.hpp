#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "besi/types.hpp"

namespace besi {

/// Unit-mass distribution over points in millimetres.
struct MassDistribution {
    Matrix support = Matrix(0, 3);  // k x 3
    Vector masses;                  // >= 0, sums to 1

    /// Throws ConstraintError for an empty support, negative or non-finite
    /// masses, or a total mass off 1 by more than 1e-12.
    void validate() const;

    Index size() const noexcept { return masses.size(); }

    static MassDistribution atom(const Eigen::Vector3d& position);

    /// Normalized block amplitudes ||x_k|| (or ||x_k||^2 when `squared`).
    /// Blocks below `threshold` times the largest amplitude are dropped.
    /// Throws DegenerateInputError for an all-zero estimate.
    static MassDistribution from_estimate(const SourceEstimate& estimate, const SourceSpace& space,
                                          bool squared = false, double threshold = 1e-9);

    /// Normalizes nonnegative weights to unit mass.
    static MassDistribution from_weights(Matrix support, const Vector& weights);
};

/// Exact earth mover's distance with Euclidean ground metric, always solved as a
/// transportation problem by the MODI simplex method.
double emd(const MassDistribution& a, const MassDistribution& b);

/// Mass-weighted mean distance to a single point; equals emd against a
/// unit atom there.
double emd_single_truth(const MassDistribution& estimate, const Eigen::Vector3d& truth);

/// Index of the largest block amplitude; ties go to the lowest index.
/// Throws DegenerateInputError for an all-zero estimate.
Index index_of_max(const SourceEstimate& estimate);
double depth_of_max(const SourceEstimate& estimate, const SourceSpace& space);

/// Absolute depth-error bins, widest first.
inline constexpr std::array<const char*, 6> kDepthErrorBins = {">20", "(15,20]", "(10,15]",
                                                              "(5,10]", "(1,5]", "<=1"};
/// Bin position of an absolute error in mm.
std::size_t depth_error_bin(double abs_error_mm);

struct DepthErrorRecord {
    std::string method;
    double abs_error_mm = 0.0;
};

/// Percentages per method; each row sums to 100.
struct DepthErrorTable {
    std::map<std::string, std::array<double, 6>> percent;
    std::map<std::string, std::size_t> count;
};

DepthErrorTable depth_error_bins(const std::vector<DepthErrorRecord>& records);

/// Linear-interpolation quantile of sorted data (h = (n - 1) p).
double quantile_sorted(const std::vector<double>& sorted, double p);

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double std = 0.0;  // n - 1 denominator, 0 for a single value
    double iqr = 0.0;
};

/// Throws ConstraintError for an empty list.
Summary summarize(std::vector<double> values);

struct Regression {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
    double slope_ci_low = 0.0, slope_ci_high = 0.0;
    double intercept_ci_low = 0.0, intercept_ci_high = 0.0;
    std::size_t count = 0;
};

/// Ordinary least squares recon = slope * true + intercept with 95 %
/// intervals from normal quantile 1.96. Throws ConstraintError for fewer
/// than two points or constant true depths.
Regression depth_regression(const std::vector<double>& true_depths,
                            const std::vector<double>& recon_depths);

}  // namespace besi
