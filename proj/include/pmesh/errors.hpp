#pragma once

#include <stdexcept>
#include <string>

namespace pmesh {

// Thrown when a well-formed request has no valid answer in the given
// configuration: unroutable path, singular scattering system, infeasible
// preset placement.  The CLI maps this to exit code 2; malformed arguments
// (std::invalid_argument) map to exit code 1.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pmesh
