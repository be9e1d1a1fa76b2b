#pragma once

#include <stdexcept>
#include <string>

namespace svyqif {

// Violated precondition: bad dimensions, out-of-range parameters, misuse.
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failure: non-positive variances, singular systems, failed calibration.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace svyqif
