#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace optgrowth {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed mesh, invalid configuration, inconsistent sizes.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (factorization, root bracketing, convergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace optgrowth
