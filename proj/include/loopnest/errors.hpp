#pragma once

#include <stdexcept>
#include <string>

namespace loopnest {

/// Argument outside the domain of an operation (bad index, n out of range, malformed permutation).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Grid extents disagree with the layer they are used with.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid cache hierarchy, design space, or combination of options.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Result set does not cover the permutations an analysis needs.
class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed command line or unknown preset; maps to exit status 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace loopnest
