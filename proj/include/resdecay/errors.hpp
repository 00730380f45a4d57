#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace resdecay {

/// Argument outside the domain of an operation (t <= 0, r < a, non-finite input, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A result that cannot be represented in double precision.
class OverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// Pole iteration failed to converge or converged onto the wrong branch.
class SolverError : public std::runtime_error {
public:
    enum class Kind { NotConverged, BasinJump, TrivialRoot };

    SolverError(Kind kind, int index, std::complex<double> last_iterate, const std::string& what)
        : std::runtime_error(what), kind_(kind), index_(index), last_(last_iterate) {}

    Kind kind() const noexcept { return kind_; }
    int index() const noexcept { return index_; }
    std::complex<double> last_iterate() const noexcept { return last_; }

private:
    Kind kind_;
    int index_;
    std::complex<double> last_;
};

/// Adaptive quadrature ran out of its subdivision budget.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double estimate, double error_bound)
        : std::runtime_error(what), estimate_(estimate), error_(error_bound) {}

    double estimate() const noexcept { return estimate_; }
    double error_bound() const noexcept { return error_; }

private:
    double estimate_;
    double error_;
};

/// Resonant-state normalization integral vanished (non-simple pole).
class DegenerateStateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace resdecay
