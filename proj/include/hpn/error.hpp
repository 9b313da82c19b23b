#pragma once

#include <stdexcept>
#include <string>

namespace hpn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed net, panel or hierarchy.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A guard referenced an atom the valuation does not assign.
class MissingAtomError : public Error {
public:
    explicit MissingAtomError(std::string atom)
        : Error("valuation does not assign atom '" + atom + "'"), atom_(std::move(atom)) {}

    const std::string& atom() const noexcept { return atom_; }

private:
    std::string atom_;
};

/// Firing a transition that is not enabled.
class DisabledTransitionError : public Error {
public:
    using Error::Error;
};

/// Firing-count vector drives the marking below zero.
class MarkingEquationError : public Error {
public:
    using Error::Error;
};

} // namespace hpn
