#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "ibrd/model.hpp"

using namespace ibrd;

namespace {

constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

// Draws n joint samples of (theta, x_1..x_k) and returns the empirical
// covariance.  Used as a simulation oracle against the closed-form algebra.
MatrixXd simulate_theta_samples_cov(const GaussianModel& model, int k, int n,
                                    std::uint64_t seed) {
  const int d = model.dim();
  const MatrixXd l_theta = MatrixXd(model.sigma_theta.llt().matrixL());
  const MatrixXd l_x = MatrixXd(model.sigma_x.llt().matrixL());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int joint_dim = d * (k + 1);
  MatrixXd sum_outer = MatrixXd::Zero(joint_dim, joint_dim);
  VectorXd z(d), row(joint_dim);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < d; ++i) z(i) = normal(rng);
    VectorXd theta = l_theta * z;
    row.segment(0, d) = theta;
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < d; ++i) z(i) = normal(rng);
      row.segment(d * (j + 1), d) = theta + l_x * z;
    }
    sum_outer += row * row.transpose();
  }
  return sum_outer / static_cast<double>(n);
}

}  // namespace

TEST_CASE("make_random_spd is deterministic, symmetric, well conditioned") {
  for (int d : {1, 3, 6}) {
    for (std::uint64_t seed : {0ull, 1ull, 42ull}) {
      MatrixXd m = make_random_spd(d, seed);
      MatrixXd again = make_random_spd(d, seed);
      CHECK((m - again).cwiseAbs().maxCoeff() == 0.0);
      CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
      CHECK(eig.eigenvalues().minCoeff() >= 0.1 - 1e-12);
    }
    MatrixXd a = make_random_spd(d, 7);
    MatrixXd b = make_random_spd(d, 8);
    CHECK((a - b).cwiseAbs().maxCoeff() > 1e-8);
  }
}

TEST_CASE("gaussian_entropy closed forms and domain errors") {
  MatrixXd unit(1, 1);
  unit << 1.0;
  CHECK(gaussian_entropy(unit) == doctest::Approx(0.5 * std::log(kTwoPiE)).epsilon(1e-12));

  MatrixXd scaled = 4.0 * MatrixXd::Identity(2, 2);
  CHECK(gaussian_entropy(scaled) ==
        doctest::Approx(std::log(kTwoPiE) + std::log(4.0)).epsilon(1e-12));

  MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(gaussian_entropy(indefinite), std::domain_error);

  MatrixXd asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(gaussian_entropy(asym), std::domain_error);
}

TEST_CASE("model constructors validate input") {
  MatrixXd good = MatrixXd::Identity(2, 2);
  MatrixXd asym(2, 2);
  asym << 1.0, 0.3, 0.1, 1.0;
  CHECK_THROWS_AS(GaussianModel(asym, good), std::invalid_argument);
  MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianModel(good, indefinite), std::invalid_argument);
  CHECK_THROWS_AS(GaussianModel(good, MatrixXd::Identity(3, 3)), std::invalid_argument);
}

TEST_CASE("posterior covariance scalar fixture and simulation oracle") {
  MatrixXd one(1, 1);
  one << 1.0;
  GaussianModel scalar(one, one);
  CHECK(posterior_theta_cov(scalar, 0)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(posterior_theta_cov(scalar, 1)(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(posterior_theta_cov(scalar, 4)(0, 0) == doctest::Approx(0.2).epsilon(1e-12));

  // Posterior covariance equals Var(theta) minus the part explained by the
  // samples; the right side comes from a pure simulation joint covariance.
  GaussianModel model(make_random_spd(2, 11), make_random_spd(2, 12));
  const int k = 3;
  MatrixXd joint = simulate_theta_samples_cov(model, k, 400000, 999);
  const int d = model.dim();
  MatrixXd sigma_theta_emp = joint.topLeftCorner(d, d);
  MatrixXd cross = joint.topRightCorner(d, d * k);
  MatrixXd sigma_obs = joint.bottomRightCorner(d * k, d * k);
  MatrixXd residual = conditional_cov(sigma_theta_emp, cross, sigma_obs);
  MatrixXd analytic = posterior_theta_cov(model, k);
  CHECK((residual - analytic).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("entropy triple ordering and large-sample limit") {
  for (std::uint64_t seed : {0ull, 3ull, 9ull}) {
    GaussianModel model = random_gaussian_model(3, seed);
    for (int k : {1, 5, 50}) {
      EntropyTriple t = entropy_triple(model, k);
      CHECK(t.h_x_given_theta <= t.h_x_given_xk + 1e-12);
      CHECK(t.h_x_given_xk <= t.h_x + 1e-12);
    }
    EntropyTriple wide = entropy_triple(model, 1000000);
    CHECK(std::abs(wide.h_x_given_xk - wide.h_x_given_theta) < 1e-5);
  }
}

TEST_CASE("sample mean joint covariance fixture and simulation oracle") {
  MatrixXd one(1, 1);
  one << 1.0;
  GaussianModel scalar(one, one);
  MatrixXd joint = sample_mean_joint_cov(scalar, 2);
  CHECK(joint(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(joint(0, 1) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(joint(1, 0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(joint(1, 1) == doctest::Approx(1.5).epsilon(1e-14));

  GaussianModel model(make_random_spd(2, 21), make_random_spd(2, 22));
  const int rounds = 3;
  MatrixXd analytic = sample_mean_joint_cov(model, rounds);
  // Simulation oracle: joint covariance of running means of the raw draws.
  MatrixXd raw = simulate_theta_samples_cov(model, rounds, 400000, 777);
  const int d = model.dim();
  MatrixXd to_means = MatrixXd::Zero(d * rounds, d * (rounds + 1));
  for (int l = 0; l < rounds; ++l)
    for (int j = 0; j <= l; ++j)
      to_means.block(l * d, (j + 1) * d, d, d) =
          MatrixXd::Identity(d, d) / static_cast<double>(l + 1);
  MatrixXd empirical = to_means * raw * to_means.transpose();
  CHECK((empirical - analytic).cwiseAbs().maxCoeff() < 0.03);

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sample_mean_joint_cov(
      GaussianModel(make_random_spd(3, 31), make_random_spd(3, 32)), 6));
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("rate bound arithmetic") {
  RateBounds cont = rd_bounds(2.0, 2.0);
  CHECK(cont.lower == doctest::Approx(0.0));
  CHECK(!cont.upper.has_value());
  CHECK(rd_bounds(2.0, 1.5).lower == doctest::Approx(0.5).epsilon(1e-14));

  RateBounds disc = rd_bounds(0.6, 0.69, 2, 0.3);
  CHECK(disc.lower == doctest::Approx(0.3).epsilon(1e-12));
  REQUIRE(disc.upper.has_value());
  CHECK(*disc.upper == doctest::Approx(0.69 + std::log(2.0) - 0.3).epsilon(1e-12));
}

TEST_CASE("discrete family validation and bernoulli grid") {
  VectorXd bad_prior(2);
  bad_prior << 0.6, 0.6;
  CHECK_THROWS_AS(bernoulli_family({0.2, 0.8}, bad_prior), std::invalid_argument);
  CHECK_THROWS_AS(bernoulli_family({0.2, 1.8}, VectorXd::Constant(2, 0.5)),
                  std::invalid_argument);

  DiscreteFamily grid = bernoulli_uniform_family(101);
  CHECK(grid.param_count() == 101);
  CHECK(grid.alphabet_size() == 2);
  CHECK(std::abs(grid.prior.sum() - 1.0) < 1e-12);
  CHECK(grid.prior(0) == doctest::Approx(0.5 * grid.prior(1)).epsilon(1e-12));
  CHECK(grid.params.front() == 0.0);
  CHECK(grid.params.back() == 1.0);
  // Predictive p(x = 1) under the uniform prior is 1/2 by symmetry.
  double p1 = grid.prior.dot(grid.likelihood.col(1));
  CHECK(p1 == doctest::Approx(0.5).epsilon(1e-12));

  double h_theta = prior_entropy(grid);
  CHECK(h_theta > 0.0);
  CHECK(h_theta <= std::log(101.0) + 1e-12);
}
