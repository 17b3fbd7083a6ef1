#pragma once

#include <Eigen/Dense>

namespace ibrd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Max-norm asymmetry relative to the matrix scale.
double asymmetry(const MatrixXd& m);

// (m + m^T) / 2.
MatrixXd symmetrized(const MatrixXd& m);

// log det of a symmetric positive definite matrix via Cholesky.
// Throws std::domain_error when the factorization fails.
double logdet_spd(const MatrixXd& m);

// Schur complement sigma_a - cross * sigma_b^{-1} * cross^T, symmetrized.
// cross is Cov(a, b), sized dim(a) x dim(b).  sigma_b must be positive
// definite; a zero-sized b returns sigma_a unchanged.
MatrixXd conditional_cov(const MatrixXd& sigma_a, const MatrixXd& cross,
                         const MatrixXd& sigma_b);

// Generalized symmetric-definite eigenproblem a v = lambda b v with a
// symmetric positive semidefinite and b symmetric positive definite.
// Eigenvalues ascending; eigenvectors unit Euclidean norm with the first
// coordinate of magnitude above 1e-12 made positive.
struct SymEig {
  VectorXd values;
  MatrixXd vectors;  // columns
};
SymEig generalized_eig(const MatrixXd& a, const MatrixXd& b);

}  // namespace ibrd
