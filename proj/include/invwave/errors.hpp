#pragma once

#include <stdexcept>
#include <string>

namespace invwave {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter outside the model's admissible domain (lambda >= 1, k2 = 0, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Caller violated an operation precondition (speed below c*, gate failure, bad grid).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A converged result failed its postcondition check (e.g. lost monotonicity).
class PostconditionError : public Error {
public:
    using Error::Error;
};

/// Nonlinear solver gave up. Carries the last residual sup-norm.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// Shift search or sandwich assembly could not satisfy the comparison inequalities.
class ConstructionError : public Error {
public:
    using Error::Error;
};

/// Time stepper left the invariant region; usually dt is too large.
class StabilityError : public Error {
public:
    using Error::Error;
};

/// Internal invariant broken (order interval escaped, singular tridiagonal system).
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace invwave
