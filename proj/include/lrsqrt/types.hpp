#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lrsqrt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix expected to be PSD (or PD) is not.
class NotPsdError : public Error {
 public:
  using Error::Error;
};

/// Raised by Sherman-Morrison-Woodbury solves whose inner matrix is singular.
class SingularOperatorError : public Error {
 public:
  SingularOperatorError() : Error("operator singular or indefinite") {}
};

/// A downdate A - ZZᵀ that would leave the cone of SPD matrices.
class InfeasibleDowndateError : public Error {
 public:
  explicit InfeasibleDowndateError(double min_eig)
      : Error("infeasible downdate: min eigenvalue of I - ZᵀA⁻¹Z is " + std::to_string(min_eig)),
        min_eig_(min_eig) {}
  double min_eig() const { return min_eig_; }

 private:
  double min_eig_;
};

/// Requested configuration cannot run with the supplied operators.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a formula.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrsqrt
