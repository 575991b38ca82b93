#pragma once

#include <stdexcept>
#include <string>

namespace magfim {

/// Sensor closer to the magnet center than the dipole validity floor (1e-6 m).
class DegenerateDistance : public std::runtime_error {
public:
    explicit DegenerateDistance(const std::string& what) : std::runtime_error(what) {}
};

/// NaN or Inf encountered where a finite value is required.
class NonFinite : public std::runtime_error {
public:
    explicit NonFinite(const std::string& what) : std::runtime_error(what) {}
};

/// Every sampled pose produced a rank-deficient information matrix.
class AllDegenerate : public std::runtime_error {
public:
    explicit AllDegenerate(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed geometry or dataset file.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A constructed object violates a documented invariant (duplicate sensors, empty layout, ...).
class InvariantViolation : public std::runtime_error {
public:
    explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

/// Damped normal equations unsolvable even after the identity-regularization fallback.
class SingularNormalEquations : public std::runtime_error {
public:
    explicit SingularNormalEquations(const std::string& what) : std::runtime_error(what) {}
};

/// Greedy placement asked for more sensors than available candidate sites.
class InsufficientCandidates : public std::runtime_error {
public:
    explicit InsufficientCandidates(const std::string& what) : std::runtime_error(what) {}
};

/// Refinement input layout has a sensor off every shell face.
class OffShell : public std::runtime_error {
public:
    explicit OffShell(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace magfim
