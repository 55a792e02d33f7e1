#pragma once

#include <stdexcept>
#include <string>

namespace walktrace {

/// Base of every error thrown by the library. `kind()` is the short
/// machine-readable tag the CLI puts into its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Requested size exceeds a memory or dense-solver budget.
class CapacityError : public Error {
public:
    explicit CapacityError(const std::string& what) : Error("capacity", what) {}
};

/// A parameter lies outside its documented domain.
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error("parameter", what) {}
};

/// Index or vertex id outside the valid range.
class BoundsError : public Error {
public:
    explicit BoundsError(const std::string& what) : Error("bounds", what) {}
};

/// Malformed or incomplete input data (records, config files, grids).
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error("input", what) {}
};

/// An iterative solver failed to reach its tolerance.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double residual)
        : Error("numerical", what), residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Filesystem failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace walktrace
