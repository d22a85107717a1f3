#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace voltvar {

/// Bad or inconsistent user-supplied configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File system / parsing failures (CLI exit code 2).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid feeder description (non-tree topology, bad impedance, ...).
class FeederError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failures: NaN gradients, solver breakdown (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-point iteration failed to settle within its iteration cap.
/// Carries the step-norm trajectory so callers can inspect divergence.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, std::vector<double> residuals)
        : NumericalError(what), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const { return residuals_; }

private:
    std::vector<double> residuals_;
};

} // namespace voltvar
