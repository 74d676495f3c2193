#pragma once

#include <stdexcept>
#include <string>

namespace seqheat {

// Invalid model configuration: degenerate spectra, malformed fields,
// unitary specs that do not fit the shell structure.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A supplied object (explicit unitary block) failed a structural check.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Relative entropy is +infinity (support violation).
class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Exact enumeration refused because the path count exceeds the cap.
class EnumerationCapError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Two routes that must agree by construction did not.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace seqheat
