#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace besi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Forward operator mapping n dipole blocks of d coefficients to m electrodes.
///
/// Columns [k*d, (k+1)*d) form block L_k. Every block must carry a strictly
/// positive Frobenius norm; a zero block would make sensitivity weights
/// undefined.
class LeadField {
public:
    LeadField() = default;
    LeadField(Matrix entries, Index d);

    const Matrix& matrix() const noexcept { return entries_; }
    Index m() const noexcept { return entries_.rows(); }
    Index n() const noexcept { return d_ == 0 ? 0 : entries_.cols() / d_; }
    Index d() const noexcept { return d_; }

    auto block(Index k) const { return entries_.middleCols(k * d_, d_); }

    /// ||L_k||_F^2 for every block, computed once at construction.
    const Vector& block_norms_sq() const noexcept { return block_norms_sq_; }

private:
    Matrix entries_;
    Index d_ = 0;
    Vector block_norms_sq_;
};

/// Candidate source locations with depth and local orientation basis.
///
/// Positions and depths are in millimetres. Orientation is stored as an
/// (n*d) x 3 matrix whose row k*d+i is the i-th unit basis vector of
/// location k; the d rows of each location are orthonormal.
class SourceSpace {
public:
    SourceSpace() = default;
    SourceSpace(Matrix positions, Vector depths, Matrix orientation, Index d);

    Index n() const noexcept { return positions_.rows(); }
    Index d() const noexcept { return d_; }
    const Matrix& positions() const noexcept { return positions_; }
    const Vector& depths() const noexcept { return depths_; }
    const Matrix& orientation() const noexcept { return orientation_; }

    Eigen::Vector3d position(Index k) const { return positions_.row(k).transpose(); }
    auto basis(Index k) const { return orientation_.middleRows(k * d_, d_); }

private:
    Matrix positions_ = Matrix(0, 3);
    Vector depths_;
    Matrix orientation_ = Matrix(0, 3);
    Index d_ = 0;
};

/// Estimated dipole moments, dn coefficients in n blocks of d.
class SourceEstimate {
public:
    SourceEstimate() = default;
    SourceEstimate(Vector coefficients, Index d);

    const Vector& coefficients() const noexcept { return coefficients_; }
    Index d() const noexcept { return d_; }
    Index n() const noexcept { return d_ == 0 ? 0 : coefficients_.size() / d_; }

    /// a_k = ||x_k||_2.
    Vector block_amplitudes() const;

private:
    Vector coefficients_;
    Index d_ = 1;
};

/// Gaussian measurement noise N(mean, covariance).
class NoiseModel {
public:
    enum class Structure { Scalar, Diagonal, Dense };

    NoiseModel() = default;
    NoiseModel(Vector mean, Matrix covariance);

    static NoiseModel white(Index m, double variance);

    const Vector& mean() const noexcept { return mean_; }
    const Matrix& covariance() const noexcept { return covariance_; }
    Index m() const noexcept { return mean_.size(); }
    Structure structure() const noexcept { return structure_; }
    double trace() const { return covariance_.trace(); }

private:
    Vector mean_;
    Matrix covariance_;
    Structure structure_ = Structure::Scalar;
};

/// Electrode potentials together with the noise model they were drawn under.
class Measurement {
public:
    Measurement() = default;
    Measurement(Vector values, NoiseModel noise);

    const Vector& values() const noexcept { return values_; }
    const NoiseModel& noise() const noexcept { return noise_; }
    Index m() const noexcept { return values_.size(); }

private:
    Vector values_;
    NoiseModel noise_;
};

}  // namespace besi
