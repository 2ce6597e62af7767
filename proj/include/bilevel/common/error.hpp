#pragma once

#include <stdexcept>
#include <string>

namespace bilevel {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension mismatches and other structural defects in an input problem.
class MalformedProblem : public Error {
public:
    using Error::Error;
};

/// An instance breaks a modeling assumption the algorithms rely on
/// (binary tenders, bounded lower level, ...).
class AssumptionViolation : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    SchemaError(std::string field_path, const std::string& what)
        : Error(field_path + ": " + what), path_(std::move(field_path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// A computation was asked for outside the size it supports.
class CapacityExceeded : public Error {
public:
    using Error::Error;
};

class NumericalTrouble : public Error {
public:
    using Error::Error;
};

}  // namespace bilevel
