// errors.hpp — exception hierarchy shared by all qtm modules

#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace qtm {

// %g-style formatting for diagnostics
inline std::string fmt_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NotHermitian : public Error {
public:
    using Error::Error;
};

class NonPositiveFrequency : public Error {
public:
    using Error::Error;
};

class NonpositiveTime : public Error {
public:
    using Error::Error;
};

// Raised when Bohr frequencies chain together across bin_tol so that a
// cluster would contain two frequencies further apart than bin_tol.
class AmbiguousBinning : public Error {
public:
    AmbiguousBinning(const std::string& what, double span, double gap)
        : Error(what), span_(span), gap_(gap) {}
    double span() const noexcept { return span_; }
    double gap() const noexcept { return gap_; }

private:
    double span_;
    double gap_;
};

// Evolution failures. Each carries the simulation time at which it fired.
class EvolutionError : public Error {
public:
    EvolutionError(const std::string& what, double t) : Error(what), t_(t) {}
    double time() const noexcept { return t_; }

private:
    double t_;
};

class TruncationOverflow : public EvolutionError {
public:
    using EvolutionError::EvolutionError;
};

class PositivityLoss : public EvolutionError {
public:
    using EvolutionError::EvolutionError;
};

class StepUnderflow : public EvolutionError {
public:
    using EvolutionError::EvolutionError;
};

// Configuration errors
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, std::string field)
        : Error(what), line_(line), field_(std::move(field)) {}
    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    int line_;
    std::string field_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace qtm
