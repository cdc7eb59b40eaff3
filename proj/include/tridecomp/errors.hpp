#pragma once

#include <stdexcept>
#include <string>

namespace tridecomp {

// Shape mismatch between states, operators, or factor vectors.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside its admissible domain (empty subsets, angles out of range, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense materialization would exceed the configured ceiling.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input does not satisfy a numerical invariant (non-Hermitian, negative spectrum, non-finite).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A hypothesis of a bound/lemma is not met. The message names the failed inequality.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A proved inequality was observed to fail. Always a defect.
class BoundViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed JSON document.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tridecomp
