#pragma once

#include <stdexcept>

namespace tc {

// Argument outside the domain where an operation is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Root finding could not certify a sign change on the bracket.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative scheme failed to reach its stopping rule.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configured guard (enumeration size, exact-DP cap, step budget, memory)
// would be exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tc
