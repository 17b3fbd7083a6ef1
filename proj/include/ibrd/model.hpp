#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ibrd/linalg.hpp"

namespace ibrd {

// Gaussian data model: parameter theta ~ N(0, sigma_theta), observations
// x = theta + noise with noise ~ N(0, sigma_x).  Both matrices symmetric
// positive definite and of equal dimension.
struct GaussianModel {
  MatrixXd sigma_x;
  MatrixXd sigma_theta;

  GaussianModel(MatrixXd sx, MatrixXd st);
  int dim() const { return static_cast<int>(sigma_x.rows()); }
};

// Finite parametric family over a finite alphabet: m parameter points with
// prior weights and per-point observation distributions.
struct DiscreteFamily {
  std::vector<double> params;  // parameter values, informational
  VectorXd prior;              // length m, sums to 1
  MatrixXd likelihood;         // m x alphabet, rows sum to 1

  DiscreteFamily(std::vector<double> parameter_points, VectorXd prior_weights,
                 MatrixXd observation_probs);
  int alphabet_size() const { return static_cast<int>(likelihood.cols()); }
  int param_count() const { return static_cast<int>(prior.size()); }
};

// Bernoulli family on alphabet {0, 1} where p(x = 1 | theta) = theta.
DiscreteFamily bernoulli_family(std::vector<double> thetas, VectorXd prior);

// Uniform prior on [0, 1] discretized to grid_points equally spaced values
// with trapezoid weights at the ends.
DiscreteFamily bernoulli_uniform_family(int grid_points);

// Empirical count vector of k samples over a finite alphabet.
struct Histogram {
  std::vector<int> counts;
  int k = 0;
};

// One point on a rate-distortion curve, all quantities in nats.
struct RDPoint {
  double beta = 0.0;
  double rate = 0.0;
  double distortion = 0.0;
  int n_active = 0;
  bool converged = true;
};

// Seeded random symmetric positive definite matrix: standard normal entries,
// symmetrized, eigen-shifted so the smallest eigenvalue is at least 0.1.
MatrixXd make_random_spd(int d, std::uint64_t seed);

// Convenience: model with sigma_x from seed 2s and sigma_theta from 2s+1.
GaussianModel random_gaussian_model(int d, std::uint64_t seed);

// Differential entropy 0.5 * log det(2 pi e sigma), nats.
double gaussian_entropy(const MatrixXd& sigma);

// Posterior covariance of theta after k observations:
// (sigma_theta^{-1} + k sigma_x^{-1})^{-1}.  k = 0 gives the prior.
MatrixXd posterior_theta_cov(const GaussianModel& model, int k);

struct EntropyTriple {
  double h_x;              // marginal entropy of a test observation
  double h_x_given_xk;     // after conditioning on k training samples
  double h_x_given_theta;  // noise floor
};
EntropyTriple entropy_triple(const GaussianModel& model, int k);

// Joint covariance of the running sample means (Sbar_1, ..., Sbar_rounds),
// block (i, j) = sigma_theta + sigma_x / max(i + 1, j + 1).
MatrixXd sample_mean_joint_cov(const GaussianModel& model, int rounds);

// Outer bounds on achievable rate at distortion d.  The upper bound needs a
// finite parameter entropy and alphabet, so it is absent for Gaussian models.
struct RateBounds {
  double lower = 0.0;
  std::optional<double> upper;
};
RateBounds rd_bounds(double h_x, double distortion);
RateBounds rd_bounds(double h_x, double h_theta, int alphabet_size,
                     double distortion);

// Shannon entropy of the prior weights, nats.
double prior_entropy(const DiscreteFamily& family);

}  // namespace ibrd
