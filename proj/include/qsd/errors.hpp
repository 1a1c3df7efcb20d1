#ifndef QSD_ERRORS_HPP
#define QSD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qsd {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller violated a documented precondition (order mismatch, bad index, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Arithmetic produced an unusable value (division by zero, NaN/Inf).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operation not supported by the active scalar backend
// (e.g. e^rho with rho != 0 under exact rational arithmetic).
class BackendError : public Error {
 public:
  using Error::Error;
};

// Series division with a zero constant term in the denominator.
class SingularDivisionError : public NumericError {
 public:
  using Error::Error;
};

// Ill-formed model input (row sums, negative masses, bad indices).
class ModelError : public Error {
 public:
  using Error::Error;
};

// Pointwise kernel evaluation left the admissible range.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Taboo linear system has spectral radius >= 1; the transform diverges.
class SupercriticalError : public Error {
 public:
  using Error::Error;
};

// The limiting taboo matrix is singular; expansion coefficients undefined.
class CriticalityError : public Error {
 public:
  using Error::Error;
};

// Return to the reference state has probability zero (g_ii == 0).
class NoReturnError : public Error {
 public:
  using Error::Error;
};

// Degenerate expansion input (b[1,0] == 0 or e[0] <= 0).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Model carries fewer perturbation orders than the requested expansion needs.
class OrderError : public Error {
 public:
  using Error::Error;
};

// Iterative conditional-law propagation lost all mass (float underflow).
class HorizonError : public Error {
 public:
  using Error::Error;
};

// Model file could not be parsed against the schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsd

#endif  // QSD_ERRORS_HPP
