#pragma once

#include <stdexcept>
#include <string>

namespace cuspkit {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state or evaluation point left the model's declared domain, or a
/// function returned a non-finite value.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Newton/bisection failed to converge. Carries the last residual seen.
class RootFindError : public Error {
public:
    RootFindError(const std::string& what, double residual)
        : Error(what + " (last residual " + std::to_string(residual) + ")"), residual_(residual) {}
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// f_y vanished where the implicit function theorem was needed.
class SolvabilityError : public Error {
public:
    using Error::Error;
};

/// Dual-number and finite-difference derivatives disagree beyond tolerance.
class DerivativeConsistencyError : public Error {
public:
    using Error::Error;
};

/// A coefficient needed as a divisor (f1, Omega, Gamma, f_y) is zero.
class DegenerateCuspError : public Error {
public:
    using Error::Error;
};

/// Results contradict each other (e.g. a positive desingularized eigenvalue
/// while every condition holds).
class InconsistencyError : public Error {
public:
    using Error::Error;
};

/// A bracketed search found no sign change.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// The Hopf root was found on a branch where det(J_a) <= 0.
class WrongBranchError : public Error {
public:
    using Error::Error;
};

/// Signal analysis could not proceed (too few samples, bad channel, ...).
class AnalysisError : public Error {
public:
    using Error::Error;
};

/// Least-squares fit had too few usable points.
class FitError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (unknown key, unknown parameter, bad value).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cuspkit
