#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace treecode {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using MatF = Eigen::MatrixXf;
using VecF = Eigen::VectorXf;
using RowMatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Thrown on malformed or unreadable files.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on invalid configuration (unknown keys, out-of-range parameters).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a computation cannot proceed numerically (non-finite data).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace treecode
