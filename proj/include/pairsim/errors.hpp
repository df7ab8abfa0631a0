#ifndef PAIRSIM_ERRORS_HPP
#define PAIRSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pairsim {

// Bad inputs: values outside their documented domain.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Time-bin post-selection kept nothing (zero surviving norm).
class PostSelectionError : public std::runtime_error {
 public:
  explicit PostSelectionError(const std::string& what) : std::runtime_error(what) {}
};

// Requested grid cannot resolve the feature being computed.
class ResolutionError : public std::runtime_error {
 public:
  explicit ResolutionError(const std::string& what) : std::runtime_error(what) {}
};

// Least-squares fit could not produce a solution.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

// A run would exceed the configured event budget.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pairsim

#endif  // PAIRSIM_ERRORS_HPP
