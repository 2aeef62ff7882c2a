#pragma once

#include <stdexcept>
#include <string>

namespace lipdyn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or size mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, vanishing operator norms, and similar numeric failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

// SVD / eigendecomposition failure (non-convergence, asymmetric input,
// eigenvalue below the PSD repair tolerance).
class DecompositionError : public Error {
 public:
  using Error::Error;
};

// Top spectral gap sigma1^2 - sigma_i^2 fell below the floor; second-order
// operator-norm derivatives are meaningless there.
class DegenerateSpectrumError : public Error {
 public:
  DegenerateSpectrumError(std::string msg, double gap, double floor, int layer = -1)
      : Error(std::move(msg)), gap(gap), floor(floor), layer(layer) {}
  double gap;
  double floor;
  int layer;  // -1 when not attributable to a layer
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lipdyn
