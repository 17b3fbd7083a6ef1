#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "ibrd/gaussian_ib.hpp"

using namespace ibrd;

namespace {

GaussianModel unit_scalar_model() {
  MatrixXd one(1, 1);
  one << 1.0;
  return GaussianModel(one, one);
}

// Simulation oracle for h(X | T): draws (theta, samples, test point, noise),
// forms features t = a sbar + z, and conditions on the empirical joint.
double simulated_projection_distortion(const GaussianModel& model, int k,
                                       const MatrixXd& a, int n,
                                       std::uint64_t seed) {
  const int d = model.dim();
  const int r = static_cast<int>(a.rows());
  const MatrixXd l_theta = MatrixXd(model.sigma_theta.llt().matrixL());
  const MatrixXd l_x = MatrixXd(model.sigma_x.llt().matrixL());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd sum_outer = MatrixXd::Zero(d + r, d + r);
  VectorXd z(d), row(d + r);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < d; ++i) z(i) = normal(rng);
    VectorXd theta = l_theta * z;
    VectorXd sbar = VectorXd::Zero(d);
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < d; ++i) z(i) = normal(rng);
      sbar += theta + l_x * z;
    }
    sbar /= static_cast<double>(k);
    for (int i = 0; i < d; ++i) z(i) = normal(rng);
    row.segment(0, d) = theta + l_x * z;
    VectorXd feat = a * sbar;
    for (int i = 0; i < r; ++i) feat(i) += normal(rng);
    row.segment(d, r) = feat;
    sum_outer += row * row.transpose();
  }
  MatrixXd joint = sum_outer / static_cast<double>(n);
  MatrixXd cond = conditional_cov(joint.topLeftCorner(d, d),
                                  joint.topRightCorner(d, r),
                                  joint.bottomRightCorner(r, r));
  return gaussian_entropy(cond);
}

}  // namespace

TEST_CASE("scalar eigenstructure fixtures") {
  GaussianModel model = unit_scalar_model();

  BottleneckEigs e1 = batch_bottleneck_matrix(model, 1);
  CHECK(e1.sigma_sbar(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(e1.k_matrix(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(std::abs(e1.eigenvalues(0) - 0.75) < 1e-12);
  CHECK(std::abs(e1.critical_betas(0) - 4.0) < 1e-12);

  BottleneckEigs e4 = batch_bottleneck_matrix(model, 4);
  CHECK(e4.sigma_sbar(0, 0) == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(e4.k_matrix(0, 0) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(std::abs(e4.eigenvalues(0) - 0.6) < 1e-12);
  CHECK(std::abs(e4.critical_betas(0) - 2.5) < 1e-12);
}

TEST_CASE("eigenvalues stay in the unit interval with unit-norm vectors") {
  for (std::uint64_t seed : {0ull, 5ull, 17ull}) {
    GaussianModel model = random_gaussian_model(4, seed);
    for (int k : {1, 3, 25}) {
      BottleneckEigs eigs = batch_bottleneck_matrix(model, k);
      for (int i = 0; i < 4; ++i) {
        CHECK(eigs.eigenvalues(i) >= 0.0);
        CHECK(eigs.eigenvalues(i) <= 1.0);
        CHECK(eigs.eigenvectors.col(i).norm() == doctest::Approx(1.0).epsilon(1e-10));
        if (i > 0) CHECK(eigs.eigenvalues(i) >= eigs.eigenvalues(i - 1));
      }
    }
  }
}

TEST_CASE("scalar closed form at beta 8 matches hand computation") {
  GaussianModel model = unit_scalar_model();
  ClosedFormResult res = closed_form_rd(model, 1, 8.0);
  const double h_x = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * 2.0);
  CHECK(res.point.rate == doctest::Approx(0.5 * std::log(7.0 / 3.0)).epsilon(1e-12));
  CHECK(res.point.rate == doctest::Approx(0.4236489).epsilon(1e-6));
  CHECK(res.point.distortion ==
        doctest::Approx(h_x + 0.5 * std::log(6.0 / 7.0)).epsilon(1e-12));
  CHECK(res.point.n_active == 1);
  CHECK(res.solution.a_matrix.rows() == 1);
}

TEST_CASE("rate switches on exactly at the critical beta") {
  GaussianModel model = unit_scalar_model();
  // Activation is strict: at the computed critical value nothing is retained.
  const double beta_c = batch_bottleneck_matrix(model, 1).critical_betas(0);
  ClosedFormResult at = closed_form_rd(model, 1, beta_c);
  CHECK(at.point.n_active == 0);
  CHECK(at.point.rate == 0.0);
  CHECK(at.point.distortion ==
        gaussian_entropy(model.sigma_x + model.sigma_theta));
  ClosedFormResult above = closed_form_rd(model, 1, beta_c + 1e-9);
  CHECK(above.point.n_active == 1);
  CHECK(above.point.rate >= 0.0);
  CHECK(above.point.rate < 1e-8);
  ClosedFormResult below = closed_form_rd(model, 1, 0.5);
  CHECK(below.point.n_active == 0);
  CHECK(below.point.rate == 0.0);
}

TEST_CASE("closed-form distortion equals projection-based distortion") {
  for (std::uint64_t seed : {2ull, 13ull}) {
    GaussianModel model = random_gaussian_model(3, seed);
    for (int k : {1, 5}) {
      BottleneckEigs eigs = batch_bottleneck_matrix(model, k);
      for (double factor : {1.5, 4.0, 40.0}) {
        double beta = eigs.critical_betas(0) * factor;
        ClosedFormResult res = closed_form_rd(model, k, beta);
        double d_proj = distortion_from_projection(model, k, res.solution.a_matrix,
                                                   res.solution.sigma_z);
        CHECK(std::abs(res.point.distortion - d_proj) < 1e-8);
      }
    }
  }
}

TEST_CASE("distortion limits: silent map and large beta") {
  GaussianModel model = unit_scalar_model();
  const double h_x = gaussian_entropy(model.sigma_x + model.sigma_theta);
  CHECK(distortion_from_projection(model, 1, MatrixXd(0, 1), MatrixXd(0, 0)) ==
        doctest::Approx(h_x).epsilon(1e-14));
  for (int k : {1, 4, 100}) {
    ClosedFormResult res = closed_form_rd(model, k, 1e6);
    double floor = entropy_triple(model, k).h_x_given_xk;
    CHECK(std::abs(res.point.distortion - floor) < 1e-5);
  }
}

TEST_CASE("projection distortion matches a simulation oracle") {
  GaussianModel model(make_random_spd(2, 41), make_random_spd(2, 42));
  MatrixXd a(2, 2);
  a << 0.9, -0.3, 0.2, 1.1;
  double analytic =
      distortion_from_projection(model, 3, a, MatrixXd::Identity(2, 2));
  double simulated = simulated_projection_distortion(model, 3, a, 400000, 4242);
  CHECK(std::abs(analytic - simulated) < 0.02);
}

TEST_CASE("singular feature covariance is rejected") {
  GaussianModel model = unit_scalar_model();
  MatrixXd a(1, 1);
  a << 1.0;
  MatrixXd negative(1, 1);
  negative << -3.0;  // var(T) = 2 - 3 < 0
  CHECK_THROWS_AS(distortion_from_projection(model, 1, a, negative),
                  std::domain_error);

  GaussianModel planar(make_random_spd(2, 51), make_random_spd(2, 52));
  MatrixXd duplicated(2, 2);
  duplicated << 1.0, 0.5, 1.0, 0.5;  // rank-1 features, no noise
  CHECK_THROWS_AS(
      distortion_from_projection(planar, 2, duplicated, MatrixXd::Zero(2, 2)),
      std::domain_error);
}

TEST_CASE("iterative solver matches the closed form") {
  GaussianModel scalar = unit_scalar_model();
  IterativeResult it = iterative_gib(scalar, 1, 8.0, 3);
  ClosedFormResult cf = closed_form_rd(scalar, 1, 8.0);
  CHECK(it.point.converged);
  CHECK(std::abs(it.point.rate - cf.point.rate) < 1e-5);
  CHECK(std::abs(it.point.distortion - cf.point.distortion) < 1e-5);
  CHECK(it.point.n_active == cf.point.n_active);

  GaussianModel model = random_gaussian_model(3, 6);
  for (double beta : {3.0, 30.0}) {
    IterativeResult mit = iterative_gib(model, 5, beta, 17);
    ClosedFormResult mcf = closed_form_rd(model, 5, beta);
    CHECK(mit.point.converged);
    CHECK(std::abs(mit.point.rate - mcf.point.rate) < 1e-5);
    CHECK(std::abs(mit.point.distortion - mcf.point.distortion) < 1e-5);
  }
}

TEST_CASE("iterative solver collapses below the critical beta") {
  GaussianModel model = unit_scalar_model();
  IterativeResult it = iterative_gib(model, 1, 1.5, 9);
  CHECK(it.point.converged);
  CHECK(it.point.rate < 1e-6);
  CHECK(std::abs(it.point.distortion -
                 gaussian_entropy(model.sigma_x + model.sigma_theta)) < 1e-6);
  CHECK(it.point.n_active == 0);
}

TEST_CASE("rd curve is monotone along the beta grid") {
  GaussianModel model = random_gaussian_model(6, 0);
  std::vector<double> betas;
  for (int i = 0; i < 20; ++i) betas.push_back(1.05 * std::pow(10.0, 3.0 * i / 19.0));
  std::vector<RDPoint> curve = rd_curve_gaussian(model, 20, betas);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].rate >= curve[i - 1].rate - 1e-12);
    CHECK(curve[i].distortion <= curve[i - 1].distortion + 1e-12);
  }
}
