#include "besi/types.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "besi/error.hpp"
#include "besi/model.hpp"

namespace besi {

LeadField::LeadField(Matrix entries, Index d) : entries_(std::move(entries)), d_(d) {
    if (d_ < 1 || d_ > 3) {
        throw ShapeError("lead field: orientation dof d must be 1, 2 or 3, got " +
                         std::to_string(d_));
    }
    if (entries_.cols() % d_ != 0) {
        throw ShapeError("lead field: column count " + std::to_string(entries_.cols()) +
                         " is not a multiple of d=" + std::to_string(d_));
    }
    const Index blocks = n();
    block_norms_sq_.resize(blocks);
    for (Index k = 0; k < blocks; ++k) {
        block_norms_sq_[k] = block(k).squaredNorm();
        if (!(block_norms_sq_[k] > 0.0) || !std::isfinite(block_norms_sq_[k])) {
            throw ShapeError("lead field: block " + std::to_string(k) +
                             " has zero or non-finite Frobenius norm");
        }
    }
}

SourceSpace::SourceSpace(Matrix positions, Vector depths, Matrix orientation, Index d)
    : positions_(std::move(positions)),
      depths_(std::move(depths)),
      orientation_(std::move(orientation)),
      d_(d) {
    if (d_ < 1 || d_ > 3) throw ShapeError("source space: d must be 1, 2 or 3");
    if (positions_.cols() != 3) throw ShapeError("source space: positions must be n x 3");
    const Index count = positions_.rows();
    if (depths_.size() != count) throw ShapeError("source space: depths length != n");
    if (orientation_.rows() != count * d_ || orientation_.cols() != 3) {
        throw ShapeError("source space: orientation must be (n*d) x 3");
    }
    for (Index k = 0; k < count; ++k) {
        if (!(depths_[k] >= 0.0)) {
            throw GeometryError("source space: negative depth at location " +
                                std::to_string(k));
        }
        const Matrix gram = basis(k) * basis(k).transpose();
        if (!gram.isApprox(Matrix::Identity(d_, d_), 1e-9)) {
            throw GeometryError("source space: orientation basis of location " +
                                std::to_string(k) + " is not orthonormal");
        }
    }
}

SourceEstimate::SourceEstimate(Vector coefficients, Index d)
    : coefficients_(std::move(coefficients)), d_(d) {
    if (d_ < 1 || coefficients_.size() % d_ != 0) {
        throw ShapeError("source estimate: length is not a multiple of d");
    }
}

Vector SourceEstimate::block_amplitudes() const { return besi::block_amplitudes(coefficients_, d_); }

namespace {

NoiseModel::Structure detect_structure(const Matrix& cov) {
    const Index m = cov.rows();
    bool diagonal = true;
    for (Index j = 0; j < m && diagonal; ++j) {
        for (Index i = 0; i < m; ++i) {
            if (i != j && cov(i, j) != 0.0) {
                diagonal = false;
                break;
            }
        }
    }
    if (!diagonal) return NoiseModel::Structure::Dense;
    for (Index i = 1; i < m; ++i) {
        if (cov(i, i) != cov(0, 0)) return NoiseModel::Structure::Diagonal;
    }
    return NoiseModel::Structure::Scalar;
}

}  // namespace

NoiseModel::NoiseModel(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    const Index m = mean_.size();
    if (covariance_.rows() != m || covariance_.cols() != m) {
        throw ShapeError("noise model: covariance must be m x m with m = mean length");
    }
    const double scale = m > 0 ? covariance_.cwiseAbs().maxCoeff() : 0.0;
    if (m > 0 && !((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() <=
                   64.0 * std::numeric_limits<double>::epsilon() * scale)) {
        throw DefiniteMatrixError("noise model: covariance is not symmetric");
    }
    Eigen::LLT<Matrix> llt(covariance_);
    if (m > 0 && llt.info() != Eigen::Success) {
        throw DefiniteMatrixError("noise model: covariance is not positive definite");
    }
    structure_ = detect_structure(covariance_);
}

NoiseModel NoiseModel::white(Index m, double variance) {
    if (!(variance > 0.0)) throw DefiniteMatrixError("noise model: variance must be > 0");
    return NoiseModel(Vector::Zero(m), Matrix::Identity(m, m) * variance);
}

Measurement::Measurement(Vector values, NoiseModel noise)
    : values_(std::move(values)), noise_(std::move(noise)) {
    if (values_.size() != noise_.m()) {
        throw ShapeError("measurement: values length does not match noise model");
    }
}

}  // namespace besi
