#pragma once

#include <stdexcept>
#include <string>

namespace cmdplab {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// LP input has inconsistent dimensions or non-finite data.
class MalformedProblem : public Error {
public:
    using Error::Error;
};

/// Simplex pivoting did not terminate within the iteration cap, or the
/// returned point failed its post-solve feasibility check.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Model data violates an invariant (probabilities, dimensions, finiteness).
class ModelError : public Error {
public:
    using Error::Error;
};

/// The chain induced by a policy has more than one recurrent class.
class ReducibleChain : public Error {
public:
    using Error::Error;
};

/// No power P^t with all entries positive exists for t <= S^2.
class PeriodicChain : public Error {
public:
    using Error::Error;
};

class NotCommunicating : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class InvalidDelta : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Tightened budget c_ub_i - d_i is non-positive.
class BudgetTooTight : public Error {
public:
    using Error::Error;
};

class WrongEnvironment : public Error {
public:
    using Error::Error;
};

/// The true CMDP has no feasible policy, so regret is undefined.
class OracleInfeasible : public Error {
public:
    using Error::Error;
};

class NotStrictlyFeasible : public Error {
public:
    using Error::Error;
};

class InvalidInputs : public Error {
public:
    using Error::Error;
};

class SingularFundamentalMatrix : public Error {
public:
    using Error::Error;
};

/// Configuration parse or validation failure. `line` is 1-based, 0 if unknown.
class ConfigError : public Error {
public:
    ConfigError(const std::string& msg, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace cmdplab
