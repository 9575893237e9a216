#pragma once

#include <stdexcept>
#include <string>

namespace fcr {

// Error categories map one-to-one onto CLI exit codes (see cli.hpp).
enum class ErrorKind {
    Argument,   // exit 2
    Data,       // exit 3
    Numerical,  // exit 4
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& what) : Error(ErrorKind::Argument, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// Adaptive quadrature did not reach its tolerance within the subdivision budget.
class QuadratureError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Parameters for which the stationary law does not exist (sigma <= 0, no mean reversion).
class DegenerateParameterError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A monotone root search could not bracket its target.
class BracketError : public NumericalError {
public:
    BracketError(const std::string& what, double achievable_lo, double achievable_hi)
        : NumericalError(what), lo_(achievable_lo), hi_(achievable_hi) {}
    double achievable_lo() const noexcept { return lo_; }
    double achievable_hi() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace fcr
