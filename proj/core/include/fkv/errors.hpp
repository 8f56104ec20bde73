#pragma once

#include <stdexcept>
#include <string>

namespace fkv {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Evaluation at a point where a kernel is singular.
class SingularityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed geometry, schedule, material or data.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Numerical failure during a solve, tagged with the step index.
class SolveError : public std::runtime_error {
public:
    SolveError(int step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

} // namespace fkv
