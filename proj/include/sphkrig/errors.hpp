#ifndef SPHKRIG_ERRORS_HPP
#define SPHKRIG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sphkrig {

// Malformed or out-of-contract input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: divergence, non-convergence, indefinite matrix (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sphkrig

#endif
