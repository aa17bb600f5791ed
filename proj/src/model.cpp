#include "besi/model.hpp"

#include <cmath>

#include "besi/error.hpp"

namespace besi {

namespace {

void check_shapes(const LeadField& lead_field, const Measurement& y) {
    if (lead_field.m() != y.m()) {
        throw ShapeError("lead field has " + std::to_string(lead_field.m()) +
                         " rows but measurement has " + std::to_string(y.m()) + " channels");
    }
}

// Applies W with W^T W = Gamma^{-1} to the columns of `rhs`.
Matrix apply_whitener(const NoiseModel& noise, const Matrix& rhs) {
    const Matrix& cov = noise.covariance();
    switch (noise.structure()) {
        case NoiseModel::Structure::Scalar:
            return rhs / std::sqrt(cov(0, 0));
        case NoiseModel::Structure::Diagonal:
            return cov.diagonal().cwiseSqrt().cwiseInverse().asDiagonal() * rhs;
        case NoiseModel::Structure::Dense: {
            Eigen::LLT<Matrix> llt(cov);
            if (llt.info() != Eigen::Success) {
                throw DefiniteMatrixError("whiten: covariance is not positive definite");
            }
            // Gamma = C C^T, W = C^{-1}
            return llt.matrixL().solve(rhs);
        }
    }
    return rhs;
}

}  // namespace

WhitenedProblem whiten(const LeadField& lead_field, const Measurement& y) {
    check_shapes(lead_field, y);
    WhitenedProblem out;
    out.d = lead_field.d();
    out.noise_trace = y.noise().trace();
    out.operator_ = apply_whitener(y.noise(), lead_field.matrix());
    out.data = apply_whitener(y.noise(), y.values() - y.noise().mean());
    return out;
}

double residual_norm(const LeadField& lead_field, const SourceEstimate& x, const Measurement& y) {
    check_shapes(lead_field, y);
    if (x.coefficients().size() != lead_field.matrix().cols()) {
        throw ShapeError("residual_norm: estimate length does not match lead field columns");
    }
    const Vector r = y.values() - lead_field.matrix() * x.coefficients() - y.noise().mean();
    const Vector wr = apply_whitener(y.noise(), r);
    return wr.squaredNorm();
}

Vector block_amplitudes(const Vector& coefficients, Index d) {
    if (d < 1 || coefficients.size() % d != 0) {
        throw ShapeError("block_amplitudes: length is not a multiple of d");
    }
    const Index n = coefficients.size() / d;
    Vector a(n);
    for (Index k = 0; k < n; ++k) a[k] = coefficients.segment(k * d, d).norm();
    return a;
}

}  // namespace besi
