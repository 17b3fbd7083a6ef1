#pragma once

#include <cstdint>
#include <vector>

#include "ibrd/model.hpp"

namespace ibrd {

// Eigenstructure governing compression of the k-sample mean against a test
// observation.  k_matrix is the conditional covariance of the sample mean
// given the test point; eigenvalues/eigenvectors solve
// k_matrix v = lambda sigma_sbar v, ascending, unit norm.
struct BottleneckEigs {
  MatrixXd k_matrix;
  MatrixXd sigma_sbar;
  VectorXd eigenvalues;    // each in [0, 1]
  MatrixXd eigenvectors;   // columns
  VectorXd critical_betas; // 1 / (1 - lambda), +inf at lambda = 1
};
BottleneckEigs batch_bottleneck_matrix(const GaussianModel& model, int k);

// Validated eigenstructure for any source/conditional covariance pair with
// k_matrix <= sigma in the definite order (eigenvalues must land in [0, 1]).
BottleneckEigs bottleneck_from_covariances(const MatrixXd& k_matrix,
                                           const MatrixXd& sigma);

// Number of components switched on at trade-off beta (strict threshold).
int active_count(const VectorXd& critical_betas, double beta);

// Optimal projection rows at beta: snr-scaled eigenvectors for the active
// components, zero rows otherwise omitted.
MatrixXd projection_from_eigs(const BottleneckEigs& eigs, double beta);

// Feature rate of the parametric optimum, in nats.
double rate_from_eigs(const BottleneckEigs& eigs, double beta);

struct BetaForRate {
  double beta = 0.0;
  bool capped = false;  // target above the rate reachable at the beta cap
};
// Inverts rate_from_eigs by bisection over beta in [1 + 1e-9, 1e9].
BetaForRate beta_for_rate(const BottleneckEigs& eigs, double target_rate,
                          double tol = 1e-8);

// Linear-Gaussian feature map t = a * sbar_k + z, z ~ N(0, sigma_z).
struct GIBSolution {
  MatrixXd a_matrix;  // n_active x d
  MatrixXd sigma_z;   // n_active x n_active
  double beta = 0.0;
  int n_active = 0;
};

struct ClosedFormResult {
  RDPoint point;
  GIBSolution solution;
};

// Parametric optimum at trade-off beta: retains components whose critical
// beta lies below beta, with closed-form rate and distortion.
ClosedFormResult closed_form_rd(const GaussianModel& model, int k, double beta);

// h(X | T) for an arbitrary feature map t = a * sbar_k + z by joint-Gaussian
// conditioning.  A rowless a returns the marginal entropy h(X).
double distortion_from_projection(const GaussianModel& model, int k,
                                  const MatrixXd& a, const MatrixXd& sigma_z);

struct IterativeResult {
  GIBSolution solution;
  RDPoint point;
  int iterations = 0;
};

// Fixed-point iteration on the full d x d feature map from a seeded random
// start.  Agrees with closed_form_rd in rate and distortion at convergence.
IterativeResult iterative_gib(const GaussianModel& model, int k, double beta,
                              std::uint64_t seed, double tol = 1e-10,
                              int max_iter = 5000);

std::vector<RDPoint> rd_curve_gaussian(const GaussianModel& model, int k,
                                       const std::vector<double>& beta_grid);

}  // namespace ibrd
