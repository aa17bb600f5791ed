#pragma once

#include "besi/types.hpp"

namespace besi {

/// Lead field and data with the noise covariance factored out.
///
/// With W^T W = Gamma^{-1}, operator = W L and data = W (y - mean), so every
/// quadratic data term becomes a plain least-squares residual. noise_trace
/// keeps trace(Gamma) of the original model for SNR computations.
struct WhitenedProblem {
    Matrix operator_;
    Vector data;
    Index d = 1;
    double noise_trace = 0.0;

    Index m() const noexcept { return operator_.rows(); }
    Index n() const noexcept { return operator_.cols() / d; }
};

/// Returns (W L, W (y - mean)). Throws DefiniteMatrixError for a non-SPD
/// covariance and ShapeError when sizes disagree.
WhitenedProblem whiten(const LeadField& lead_field, const Measurement& y);

/// (y - L x - mean)^T Gamma^{-1} (y - L x - mean).
double residual_norm(const LeadField& lead_field, const SourceEstimate& x,
                     const Measurement& y);

/// Block amplitudes of a raw coefficient vector; size must be a multiple of d.
Vector block_amplitudes(const Vector& coefficients, Index d);

}  // namespace besi
