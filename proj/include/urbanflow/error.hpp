#pragma once

#include <stdexcept>
#include <string>

namespace urbanflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent run configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that violates a schema or a type invariant. The message names
/// the file, row and column (or the offending entity).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Infeasible or ill-posed discrete choice problem.
class ChoiceError : public Error {
public:
    using Error::Error;
};

class AssignmentError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed; wraps the underlying message (CLI exit code 3).
class StageError : public Error {
public:
    StageError(std::string stage, int year, const std::string& what)
        : Error("stage '" + stage + "' failed in year " + std::to_string(year) + ": " + what),
          stage_(std::move(stage)),
          year_(year) {}

    const std::string& stage() const noexcept { return stage_; }
    int year() const noexcept { return year_; }

private:
    std::string stage_;
    int year_;
};

} // namespace urbanflow
