#include "ibrd/gaussian_ib.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace ibrd {

BottleneckEigs batch_bottleneck_matrix(const GaussianModel& model, int k) {
  if (k < 1) throw std::invalid_argument("batch_bottleneck_matrix: k must be positive");
  const MatrixXd sigma_x_marg = model.sigma_x + model.sigma_theta;
  const MatrixXd sigma_sbar = model.sigma_x / static_cast<double>(k) + model.sigma_theta;
  const MatrixXd shrink =
      model.sigma_theta * sigma_x_marg.llt().solve(model.sigma_theta);

  // Two algebraically equal routes to the conditional covariance; keeping
  // both guards the covariance bookkeeping.
  const MatrixXd k_direct = sigma_x_marg / static_cast<double>(k) +
                            (static_cast<double>(k - 1) / k) * model.sigma_theta -
                            shrink;
  const MatrixXd k_schur = sigma_sbar - shrink;
  if ((k_direct - k_schur).cwiseAbs().maxCoeff() > 1e-10)
    throw std::logic_error("batch_bottleneck_matrix: conditional covariance routes disagree");

  return bottleneck_from_covariances(k_direct, sigma_sbar);
}

BottleneckEigs bottleneck_from_covariances(const MatrixXd& k_matrix,
                                           const MatrixXd& sigma) {
  BottleneckEigs out;
  out.k_matrix = symmetrized(k_matrix);
  out.sigma_sbar = symmetrized(sigma);
  SymEig eig = generalized_eig(out.k_matrix, out.sigma_sbar);
  out.eigenvalues = eig.values;
  out.eigenvectors = eig.vectors;
  const Eigen::Index d = out.eigenvalues.size();
  for (Eigen::Index i = 0; i < d; ++i) {
    double lambda = out.eigenvalues(i);
    if (lambda < -1e-9 || lambda > 1.0 + 1e-9)
      throw std::logic_error("bottleneck_from_covariances: eigenvalue outside [0, 1]");
    out.eigenvalues(i) = std::clamp(lambda, 0.0, 1.0);
  }
  out.critical_betas.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double lambda = out.eigenvalues(i);
    out.critical_betas(i) = lambda < 1.0 ? 1.0 / (1.0 - lambda)
                                         : std::numeric_limits<double>::infinity();
  }
  return out;
}

int active_count(const VectorXd& critical_betas, double beta) {
  int n = 0;
  while (n < critical_betas.size() && critical_betas(n) < beta) ++n;
  return n;
}

MatrixXd projection_from_eigs(const BottleneckEigs& eigs, double beta) {
  const int n = active_count(eigs.critical_betas, beta);
  const Eigen::Index d = eigs.eigenvectors.rows();
  MatrixXd a = MatrixXd::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    const double lambda = eigs.eigenvalues(i);
    if (!(lambda > 0.0))
      throw std::logic_error("projection_from_eigs: vanishing eigenvalue");
    const VectorXd v = eigs.eigenvectors.col(i);
    const double scale_sq =
        (beta * (1.0 - lambda) - 1.0) / (lambda * v.dot(eigs.sigma_sbar * v));
    a.row(i) = std::sqrt(scale_sq) * v.transpose();
  }
  return a;
}

double rate_from_eigs(const BottleneckEigs& eigs, double beta) {
  const int n = active_count(eigs.critical_betas, beta);
  double rate = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lambda = eigs.eigenvalues(i);
    rate += 0.5 * std::log((beta - 1.0) * (1.0 - lambda) / lambda);
  }
  return rate;
}

BetaForRate beta_for_rate(const BottleneckEigs& eigs, double target_rate,
                          double tol) {
  constexpr double kLo = 1.0 + 1e-9;
  constexpr double kHi = 1e9;
  BetaForRate out;
  if (target_rate <= 0.0) {
    double bc_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eigs.critical_betas.size(); ++i)
      bc_min = std::min(bc_min, eigs.critical_betas(i));
    if (std::isfinite(bc_min)) {
      out.beta = bc_min;
    } else {
      out.beta = kHi;
      out.capped = true;
    }
    return out;
  }
  if (rate_from_eigs(eigs, kHi) < target_rate) {
    out.beta = kHi;
    out.capped = true;
    return out;
  }
  double lo = kLo;
  double hi = kHi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double rate = rate_from_eigs(eigs, mid);
    if (std::abs(rate - target_rate) <= tol) {
      out.beta = mid;
      return out;
    }
    (rate < target_rate ? lo : hi) = mid;
  }
  out.beta = 0.5 * (lo + hi);
  return out;
}

ClosedFormResult closed_form_rd(const GaussianModel& model, int k, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("closed_form_rd: beta must be positive");
  const BottleneckEigs eigs = batch_bottleneck_matrix(model, k);
  const int n_active = active_count(eigs.critical_betas, beta);

  ClosedFormResult out;
  out.point.beta = beta;
  out.point.n_active = n_active;
  out.solution.beta = beta;
  out.solution.n_active = n_active;
  out.solution.a_matrix = projection_from_eigs(eigs, beta);
  out.solution.sigma_z = MatrixXd::Identity(n_active, n_active);

  double distortion_shift = 0.0;
  for (int i = 0; i < n_active; ++i)
    distortion_shift += 0.5 * std::log(eigs.eigenvalues(i) * beta / (beta - 1.0));
  out.point.rate = rate_from_eigs(eigs, beta);
  out.point.distortion =
      gaussian_entropy(model.sigma_x + model.sigma_theta) + distortion_shift;
  return out;
}

double distortion_from_projection(const GaussianModel& model, int k,
                                  const MatrixXd& a, const MatrixXd& sigma_z) {
  if (k < 1) throw std::invalid_argument("distortion_from_projection: k must be positive");
  const MatrixXd sigma_x_marg = model.sigma_x + model.sigma_theta;
  if (a.rows() == 0) return gaussian_entropy(sigma_x_marg);
  if (a.cols() != model.dim())
    throw std::invalid_argument("distortion_from_projection: projection width mismatch");
  if (sigma_z.rows() != a.rows() || sigma_z.cols() != a.rows())
    throw std::invalid_argument("distortion_from_projection: noise covariance size mismatch");
  const MatrixXd sigma_sbar = model.sigma_x / static_cast<double>(k) + model.sigma_theta;
  const MatrixXd var_t = symmetrized(a * sigma_sbar * a.transpose() + sigma_z);
  const MatrixXd cross = model.sigma_theta * a.transpose();  // Cov(X, T)
  return gaussian_entropy(conditional_cov(sigma_x_marg, cross, var_t));
}

IterativeResult iterative_gib(const GaussianModel& model, int k, double beta,
                              std::uint64_t seed, double tol, int max_iter) {
  if (!(beta > 0.0)) throw std::invalid_argument("iterative_gib: beta must be positive");
  const int d = model.dim();
  const BottleneckEigs eigs = batch_bottleneck_matrix(model, k);
  const MatrixXd& sigma_sbar = eigs.sigma_sbar;
  const MatrixXd& sigma_sbar_given_x = eigs.k_matrix;
  const MatrixXd identity = MatrixXd::Identity(d, d);
  // Right factor of the projection update; fixed throughout.
  const MatrixXd residual_factor =
      identity - sigma_sbar_given_x * sigma_sbar.llt().solve(identity);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = normal(rng);
  MatrixXd sigma_z = identity;

  MatrixXd a_prev = a;
  MatrixXd sigma_z_prev = sigma_z;
  bool converged = false;
  int damping_events = 0;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const MatrixXd var_t = symmetrized(a * sigma_sbar * a.transpose() + sigma_z);
    const MatrixXd var_t_given_x =
        symmetrized(a * sigma_sbar_given_x * a.transpose() + sigma_z);
    // New noise covariance combines the inverse feature covariances; the
    // bracket is positive definite for beta >= 1 because conditioning can
    // only shrink var_t.
    const MatrixXd inv_arg =
        symmetrized(beta * var_t_given_x.llt().solve(identity) -
                    (beta - 1.0) * var_t.llt().solve(identity));
    Eigen::LLT<MatrixXd> llt(inv_arg);
    if (llt.info() != Eigen::Success) {
      if (++damping_events > 20) break;
      if ((a - a_prev).cwiseAbs().maxCoeff() > 0.0) {
        a = 0.5 * (a + a_prev);
        sigma_z = 0.5 * (sigma_z + sigma_z_prev);
      } else {
        a *= 0.5;
      }
      continue;
    }
    const MatrixXd sigma_z_next = symmetrized(llt.solve(identity));
    const MatrixXd a_next =
        beta * sigma_z_next * var_t_given_x.llt().solve(a) * residual_factor;
    const double step = std::max((a_next - a).cwiseAbs().maxCoeff(),
                                 (sigma_z_next - sigma_z).cwiseAbs().maxCoeff());
    a_prev = a;
    sigma_z_prev = sigma_z;
    a = a_next;
    sigma_z = sigma_z_next;
    if (step < tol) {
      converged = true;
      ++iter;
      break;
    }
  }

  IterativeResult out;
  out.iterations = iter;
  out.solution.a_matrix = a;
  out.solution.sigma_z = sigma_z;
  out.solution.beta = beta;
  out.point.beta = beta;
  out.point.converged = converged;
  const double logdet_t = logdet_spd(a * sigma_sbar * a.transpose() + sigma_z);
  out.point.rate = 0.5 * (logdet_t - logdet_spd(sigma_z));
  out.point.distortion = distortion_from_projection(model, k, a, sigma_z);

  Eigen::JacobiSVD<MatrixXd> svd(a);
  const double sv_max = svd.singularValues().size() > 0
                            ? svd.singularValues().maxCoeff()
                            : 0.0;
  int n_active = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-6 * (1.0 + sv_max)) ++n_active;
  out.point.n_active = n_active;
  out.solution.n_active = n_active;
  return out;
}

std::vector<RDPoint> rd_curve_gaussian(const GaussianModel& model, int k,
                                       const std::vector<double>& beta_grid) {
  std::vector<RDPoint> out;
  out.reserve(beta_grid.size());
  for (double beta : beta_grid) out.push_back(closed_form_rd(model, k, beta).point);
  return out;
}

}  // namespace ibrd
