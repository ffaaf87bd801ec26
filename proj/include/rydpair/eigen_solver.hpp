#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace rydpair {

/// Eigenvalues ascending, eigenvectors in columns.
struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

struct ComplexEigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
};

/// Dense symmetric/Hermitian solvers (LAPACK divide and conquer). Only the
/// lower triangle is read. Throw NumericalError on failure.
EigenSystem eigh(const Eigen::MatrixXd &h);
ComplexEigenSystem eigh(const Eigen::MatrixXcd &h);
Eigen::VectorXd eigvalsh(const Eigen::MatrixXd &h);
Eigen::VectorXd eigvalsh(const Eigen::MatrixXcd &h);

/// Groups the indices of a square matrix into the connected components of its
/// nonzero pattern (|h_ij| > tol). Components are ordered by smallest index.
template <typename Derived>
std::vector<std::vector<int>> connected_blocks(const Eigen::MatrixBase<Derived> &h, double tol = 0.0);

/// True when every imaginary part is at most tol.
bool is_real(const Eigen::MatrixXcd &h, double tol = 0.0);

} // namespace rydpair

#include "rydpair/detail/connected_blocks.hpp"
