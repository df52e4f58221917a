#pragma once

#include <stdexcept>
#include <string>

namespace gwqs {

// Invalid arguments: out-of-range classes, mismatched lengths, bad parameters.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An iterative solver did not reach its tolerance. Carries the last residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, long iterations)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + " after "
                             + std::to_string(iterations) + " iterations)"),
          residual_(residual),
          iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double residual_;
    long iterations_;
};

// Operation requested outside the parameter region where it is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Population or sampler mean beyond what the simulators accept.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Monte Carlo estimate could not be formed (e.g. every replica went extinct).
class StatisticalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gwqs
