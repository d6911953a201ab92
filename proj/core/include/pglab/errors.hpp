#pragma once

#include <stdexcept>
#include <string>

namespace pglab {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad dimensions, query on a
/// terminal state, logits outside the accepted range, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A dense solve hit a singular system. With validated inputs this signals
/// an MDP whose termination guarantee was violated.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// A critic fit was combined with a baseline (or policy, or MDP) other than
/// the one it was fit against.
class PairingMismatchError : public Error {
public:
    using Error::Error;
};

/// Malformed or schema-violating input document.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace pglab
