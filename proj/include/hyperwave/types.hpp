#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace hyperwave {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Error taxonomy; the CLI maps these to exit codes (config 2, data 3, numeric 4).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown by eig_sym when the matrix exceeds the exact-mode cap; a
// configuration problem (switch to chebyshev mode or raise the cap).
class SpectralCapError : public ConfigError {
 public:
  explicit SpectralCapError(const std::string& msg) : ConfigError(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace hyperwave
