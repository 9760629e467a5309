#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gmmdeploy {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

using Vec2 = Vector2<double>;
using Mat2 = Matrix2<double>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Invalid scenario or user input. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown (divergence, singular matrix, ...). Maps to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gmmdeploy
