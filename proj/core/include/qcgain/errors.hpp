#pragma once

#include <stdexcept>
#include <string>

namespace qcgain {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteEntry : public Error {
 public:
  using Error::Error;
};

/// The implicit loop equation v = C1 x + D11 phi(v) + D12 u did not converge.
class FixedPointDivergence : public Error {
 public:
  using Error::Error;
};

class UnstableNominal : public Error {
 public:
  using Error::Error;
};

class NegativeLambda : public Error {
 public:
  using Error::Error;
};

class OutOfSector : public Error {
 public:
  using Error::Error;
};

class SectorViolation : public Error {
 public:
  using Error::Error;
};

class WitnessNotStrict : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace qcgain
