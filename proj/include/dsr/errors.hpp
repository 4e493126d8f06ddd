#pragma once

#include <stdexcept>
#include <string>

namespace dsr {

/// Malformed input: missing link entries, bad ids, schema violations.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An instance whose repair problem has no solution (e.g. unreachable new node).
class InfeasibleInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Exhaustive enumeration would be too large; use the max-flow oracle.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace dsr
