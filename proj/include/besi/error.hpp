#pragma once

#include <stdexcept>
#include <string>

namespace besi {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimensions of two operands disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Matrix expected to be symmetric positive definite is not.
class DefiniteMatrixError : public Error {
public:
    using Error::Error;
};

/// Source or electrode geometry is invalid (outside sphere, undefined basis).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Parameter outside its admissible range (e.g. snr <= 1, alpha_bar <= 2).
class ConstraintError : public Error {
public:
    using Error::Error;
};

/// Input data cannot produce a meaningful estimate (e.g. all-zero data).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Iterative numerical routine failed (root bracketing, factorization).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or container file; `where` locates the problem.
class ConfigError : public Error {
public:
    ConfigError(std::string where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

}  // namespace besi
