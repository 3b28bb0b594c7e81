#pragma once

#include <stdexcept>
#include <string>

namespace tminimax {

// Arm label that does not exist for the given horizon (pulse index outside 2..T).
class InvalidArm : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Arguments outside the mathematical domain of an operation (non-positive
// counts, T < 2, infeasible N, out-of-range time index, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// An estimator was asked to average over an empty group of units.
class UndefinedEstimator : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line and column of the problem
// (column 0 when the whole line is at fault).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error(what), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace tminimax
