#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pwmsnb {

/// Categories of failure raised by the library. Every thrown Error carries one.
enum class ErrorKind {
    Dimension,          ///< operand shapes do not match
    Overflow,           ///< a result is not finite
    NonConvergence,     ///< an iteration ran out of budget
    Evaluation,         ///< a user callback returned a non-finite value
    Singular,           ///< a linear system or Jacobian is singular
    UnsupportedScheme,  ///< topology/controller pairing not modelled
    UnsupportedParameter,
    InvalidParameter,   ///< a value violates a type invariant
    DegenerateOrbit,    ///< I - e^{A1 d} e^{A2 (T-d)} is singular
    Grazing,            ///< switching condition is tangent to the ramp
    NoCriticalValue,
    NoSnbInBracket,
    ModelInvariant,     ///< two closed forms that must agree did not
    Parse,
    Schema,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by iterative solvers; keeps the best iterate reached.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, std::vector<double> best)
        : Error(ErrorKind::NonConvergence, what), best_(std::move(best)) {}

    const std::vector<double>& best_iterate() const noexcept { return best_; }

private:
    std::vector<double> best_;
};

}  // namespace pwmsnb
