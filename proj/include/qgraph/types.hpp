#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qgraph {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Malformed or inconsistent input (bad file, unknown id, size mismatch).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The request is well-formed but outside what the library computes
/// (e.g. a spectral operation on a graph with an infinite edge).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical precondition failed (e.g. a value is not an eigenvalue).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qgraph
