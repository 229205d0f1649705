#pragma once

#include <stdexcept>
#include <string>

namespace mumab {

// Caller passed something outside an operation's domain (bad index, empty table).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Reward model is malformed: a mean outside [0,1] or a support leaving [0,1].
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// More users than the channels can hold (K > M*N).
class InfeasibleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Every feasible configuration has the same system value, so the gap is undefined.
class DegenerateGapError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class OracleTooLargeError : public std::length_error {
public:
    using std::length_error::length_error;
};

// A component broke a contract another relies on: out-of-range rewards,
// unknown users in a churn schedule, negative regret increments.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Bad experiment or model document. line() is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message)
        , line_(line)
    {
    }

    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace mumab
