#pragma once

#include <stdexcept>
#include <string>

namespace rsmv {

/// Failure raised by any validator or solver. `code()` is a stable
/// machine-readable identifier (e.g. "RowSumViolation") that the CLI
/// forwards verbatim in its JSON error objects.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Config-level validation failures (bad generator, market, horizon, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical failures inside the backward solvers or simulator.
class SolverError : public Error {
public:
    using Error::Error;
};

} // namespace rsmv
