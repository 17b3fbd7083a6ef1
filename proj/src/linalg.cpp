#include "ibrd/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace ibrd {

double asymmetry(const MatrixXd& m) {
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double logdet_spd(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::domain_error("logdet: matrix not square");
  if (!m.allFinite()) throw std::domain_error("logdet: matrix has non-finite entries");
  if (asymmetry(m) > 1e-8) throw std::domain_error("logdet: matrix not symmetric");
  Eigen::LLT<MatrixXd> llt(symmetrized(m));
  if (llt.info() != Eigen::Success)
    throw std::domain_error("logdet: matrix not positive definite");
  return 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

MatrixXd conditional_cov(const MatrixXd& sigma_a, const MatrixXd& cross,
                         const MatrixXd& sigma_b) {
  if (sigma_b.rows() == 0) return symmetrized(sigma_a);
  Eigen::LLT<MatrixXd> llt(symmetrized(sigma_b));
  if (llt.info() != Eigen::Success)
    throw std::domain_error("conditional_cov: conditioning covariance not positive definite");
  MatrixXd out = symmetrized(sigma_a - cross * llt.solve(cross.transpose()));
  if (!out.allFinite())
    throw std::domain_error("conditional_cov: conditioning covariance is singular");
  return out;
}

SymEig generalized_eig(const MatrixXd& a, const MatrixXd& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> solver(symmetrized(a),
                                                            symmetrized(b));
  if (solver.info() != Eigen::Success)
    throw std::domain_error("generalized_eig: decomposition failed");
  SymEig out;
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  for (int j = 0; j < out.vectors.cols(); ++j) {
    out.vectors.col(j).normalize();
    for (int i = 0; i < out.vectors.rows(); ++i) {
      if (std::abs(out.vectors(i, j)) > 1e-12) {
        if (out.vectors(i, j) < 0.0) out.vectors.col(j) = -out.vectors.col(j);
        break;
      }
    }
  }
  return out;
}

}  // namespace ibrd
