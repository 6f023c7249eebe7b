#pragma once

#include <stdexcept>
#include <string>

namespace vesicle {

/// Bad arguments: wrong sizes, non-finite data, violated preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A curve whose parameterization has collapsed (|dx/dθ| ≈ 0) or is otherwise unusable.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular preconditioner block, found while factoring.
class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vesicle
