#pragma once

#include <stdexcept>
#include <string>

namespace curlaw {

// Bad caller input: out-of-range parameter, malformed interval list, etc.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Three cosines that cannot be realized by unit vectors.
class InfeasibleGeometry : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Quadrature or fixed-point iteration failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Curation removed every training example.
class EmptyKeptSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The fitted weight vector is (numerically) zero.
class DegenerateEstimator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal consistency check failed; indicates a bug, not bad input.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace curlaw
