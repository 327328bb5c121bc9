#pragma once

#include <stdexcept>
#include <string>

namespace slt {

// Shape or dimension disagreement between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-range index (token id, embedding row, keypoint).
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Invalid hyperparameter or argument value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Sequence longer than a configured capacity.
class LengthError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Malformed input file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset / checkpoint loading failure.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values in loss or gradients.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value that cannot be computed (e.g. a mean over zero elements).
class UndefinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Misuse of the autodiff graph (e.g. backward twice on one root).
class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace slt
