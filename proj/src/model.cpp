#include "ibrd/model.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ibrd {

namespace {

void check_model_matrix(const MatrixXd& m, const char* name) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw std::invalid_argument(std::string(name) + ": must be square and nonempty");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument(std::string(name) + ": not symmetric within 1e-10");
  Eigen::LLT<MatrixXd> llt(symmetrized(m));
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(name) + ": not positive definite");
}

}  // namespace

GaussianModel::GaussianModel(MatrixXd sx, MatrixXd st)
    : sigma_x(std::move(sx)), sigma_theta(std::move(st)) {
  check_model_matrix(sigma_x, "sigma_x");
  check_model_matrix(sigma_theta, "sigma_theta");
  if (sigma_x.rows() != sigma_theta.rows())
    throw std::invalid_argument("model: sigma_x and sigma_theta dimensions differ");
}

DiscreteFamily::DiscreteFamily(std::vector<double> parameter_points,
                               VectorXd prior_weights, MatrixXd observation_probs)
    : params(std::move(parameter_points)),
      prior(std::move(prior_weights)),
      likelihood(std::move(observation_probs)) {
  if (prior.size() == 0 || likelihood.cols() == 0)
    throw std::invalid_argument("family: empty prior or alphabet");
  if (likelihood.rows() != prior.size())
    throw std::invalid_argument("family: prior and likelihood row counts differ");
  if (!params.empty() && static_cast<Eigen::Index>(params.size()) != prior.size())
    throw std::invalid_argument("family: parameter list length mismatch");
  if (prior.minCoeff() < 0.0 || likelihood.minCoeff() < 0.0)
    throw std::invalid_argument("family: negative probability");
  if (std::abs(prior.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("family: prior does not sum to 1");
  for (Eigen::Index i = 0; i < likelihood.rows(); ++i)
    if (std::abs(likelihood.row(i).sum() - 1.0) > 1e-10)
      throw std::invalid_argument("family: likelihood row does not sum to 1");
}

DiscreteFamily bernoulli_family(std::vector<double> thetas, VectorXd prior) {
  const auto m = static_cast<Eigen::Index>(thetas.size());
  MatrixXd lik(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    double t = thetas[static_cast<std::size_t>(i)];
    if (t < 0.0 || t > 1.0)
      throw std::invalid_argument("bernoulli_family: theta outside [0, 1]");
    lik(i, 0) = 1.0 - t;
    lik(i, 1) = t;
  }
  return DiscreteFamily(std::move(thetas), std::move(prior), std::move(lik));
}

DiscreteFamily bernoulli_uniform_family(int grid_points) {
  if (grid_points < 2)
    throw std::invalid_argument("bernoulli_uniform_family: need at least 2 grid points");
  std::vector<double> thetas(static_cast<std::size_t>(grid_points));
  VectorXd prior(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    thetas[static_cast<std::size_t>(i)] = static_cast<double>(i) / (grid_points - 1);
    prior(i) = (i == 0 || i == grid_points - 1) ? 0.5 : 1.0;
  }
  prior /= prior.sum();
  return bernoulli_family(std::move(thetas), std::move(prior));
}

MatrixXd make_random_spd(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("make_random_spd: d must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = normal(rng);
  MatrixXd m = symmetrized(g);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
  double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig <= 0.1)
    m += (std::abs(min_eig) + 0.1) * MatrixXd::Identity(d, d);
  return m;
}

GaussianModel random_gaussian_model(int d, std::uint64_t seed) {
  return GaussianModel(make_random_spd(d, 2 * seed), make_random_spd(d, 2 * seed + 1));
}

double gaussian_entropy(const MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
    throw std::domain_error("gaussian_entropy: matrix must be square and nonempty");
  if (asymmetry(sigma) > 1e-8)
    throw std::domain_error("gaussian_entropy: matrix not symmetric");
  const double d = static_cast<double>(sigma.rows());
  return 0.5 * (d * std::log(2.0 * std::numbers::pi * std::numbers::e) +
                logdet_spd(sigma));
}

MatrixXd posterior_theta_cov(const GaussianModel& model, int k) {
  if (k < 0) throw std::invalid_argument("posterior_theta_cov: k must be nonnegative");
  if (k == 0) return model.sigma_theta;
  const int d = model.dim();
  MatrixXd precision = model.sigma_theta.llt().solve(MatrixXd::Identity(d, d)) +
                       k * model.sigma_x.llt().solve(MatrixXd::Identity(d, d));
  return symmetrized(symmetrized(precision).llt().solve(MatrixXd::Identity(d, d)));
}

EntropyTriple entropy_triple(const GaussianModel& model, int k) {
  EntropyTriple out;
  out.h_x = gaussian_entropy(model.sigma_x + model.sigma_theta);
  out.h_x_given_xk = gaussian_entropy(model.sigma_x + posterior_theta_cov(model, k));
  out.h_x_given_theta = gaussian_entropy(model.sigma_x);
  return out;
}

MatrixXd sample_mean_joint_cov(const GaussianModel& model, int rounds) {
  if (rounds < 1) throw std::invalid_argument("sample_mean_joint_cov: rounds must be positive");
  const int d = model.dim();
  MatrixXd joint(d * rounds, d * rounds);
  for (int i = 0; i < rounds; ++i)
    for (int j = 0; j < rounds; ++j)
      joint.block(i * d, j * d, d, d) =
          model.sigma_theta + model.sigma_x / static_cast<double>(std::max(i, j) + 1);
  return joint;
}

RateBounds rd_bounds(double h_x, double distortion) {
  RateBounds out;
  out.lower = h_x - distortion;
  return out;
}

RateBounds rd_bounds(double h_x, double h_theta, int alphabet_size,
                     double distortion) {
  if (alphabet_size < 1)
    throw std::invalid_argument("rd_bounds: alphabet size must be positive");
  RateBounds out;
  out.lower = h_x - distortion;
  out.upper = h_theta + std::log(static_cast<double>(alphabet_size)) - distortion;
  return out;
}

double prior_entropy(const DiscreteFamily& family) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < family.prior.size(); ++i) {
    double p = family.prior(i);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace ibrd
