#pragma once

#include <stdexcept>
#include <string>

namespace qstrip {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Periodic Poisson problem with a right-hand side whose mean is not
/// negligibly small; no periodic solution exists.
class NonZeroMeanRHS : public Error {
public:
    explicit NonZeroMeanRHS(const std::string& what) : Error(what) {}
};

/// Time step violates the advective CFL bound.
class CFLViolation : public Error {
public:
    explicit CFLViolation(const std::string& what) : Error(what) {}
};

/// Field carries too much energy near the grid cutoff; derived
/// quantities would be dominated by truncation error.
class UnresolvedField : public Error {
public:
    explicit UnresolvedField(const std::string& what) : Error(what) {}
};

/// Two objects that must share a grid do not.
class GridMismatch : public Error {
public:
    explicit GridMismatch(const std::string& what) : Error(what) {}
};

/// Strip bounds with alpha >= beta.
class InvalidStrip : public Error {
public:
    explicit InvalidStrip(const std::string& what) : Error(what) {}
};

/// Ledger table lacks the full-range entry required for the global check.
class MissingFullRange : public Error {
public:
    explicit MissingFullRange(const std::string& what) : Error(what) {}
};

/// Malformed configuration or snapshot input.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace qstrip
