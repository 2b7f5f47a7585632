#pragma once

#include <Eigen/Dense>

namespace spthe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values(k)
  int sweeps = 0;
};

/// Cyclic Jacobi rotations on the symmetric part of `a`. Intended for the
/// small dense matrices that appear as data matrices (n <= ~10).
SymmetricEigen jacobi_eigen(const Matrix& a, double tol = 1e-15, int max_sweeps = 100);

double min_eigenvalue(const Matrix& symmetric);

/// Largest singular value, sqrt(lambda_max(A^T A)).
double spectral_norm(const Matrix& a);

/// max |A - A^T| relative to max |A|; zero for the zero matrix.
double symmetry_defect(const Matrix& a);

}  // namespace spthe
