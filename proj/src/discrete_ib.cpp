#include "ibrd/discrete_ib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ibrd/hull.hpp"

namespace ibrd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMaxEnumeration = 50'000'000;

std::uint64_t histogram_count(int alphabet_size, int k) {
  std::uint64_t count = 1;
  for (int i = 1; i < alphabet_size; ++i) {
    std::uint64_t next;
    if (__builtin_mul_overflow(count, static_cast<std::uint64_t>(k) + i, &next))
      throw std::length_error("enumerate_histograms: histogram count overflows");
    count = next / i;  // running product of C(k+i, i) stays integral
    if (count > kMaxEnumeration)
      throw std::length_error("enumerate_histograms: histogram count beyond desk scale");
  }
  return count;
}

void fill_histograms(int pos, int remaining, std::vector<int>& current,
                     int k, std::vector<Histogram>& out) {
  const int last = static_cast<int>(current.size()) - 1;
  if (pos == last) {
    current[static_cast<std::size_t>(pos)] = remaining;
    out.push_back(Histogram{current, k});
    return;
  }
  for (int c = remaining; c >= 0; --c) {
    current[static_cast<std::size_t>(pos)] = c;
    fill_histograms(pos + 1, remaining - c, current, k, out);
  }
}

double entropy_of(const VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  return h;
}

// I(A;B) from a joint table with rows/cols marginals taken from the table.
double mutual_information(const MatrixXd& joint) {
  VectorXd row_marg = joint.rowwise().sum();
  VectorXd col_marg = joint.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index a = 0; a < joint.rows(); ++a)
    for (Eigen::Index b = 0; b < joint.cols(); ++b) {
      double p = joint(a, b);
      if (p > 0.0) mi += p * std::log(p / (row_marg(a) * col_marg(b)));
    }
  // Rounding can leave an exactly-independent joint a few ulps below zero.
  return std::max(mi, 0.0);
}

// Marginal and decoder recomputed from the encoder; degenerate feature
// values fall back to the predictive distribution.
void refresh_from_encoder(DiscreteIBState& state, const HistogramStats& stats) {
  state.marginal = state.encoder.transpose() * stats.p_h;
  const auto n_t = state.encoder.cols();
  const auto n_x = stats.p_xh.cols();
  state.decoder.resize(n_t, n_x);
  MatrixXd weighted = state.encoder.transpose() * stats.p_xh;  // q(t) p(x|t)
  for (Eigen::Index t = 0; t < n_t; ++t) {
    if (state.marginal(t) > 0.0)
      state.decoder.row(t) = weighted.row(t) / state.marginal(t);
    else
      state.decoder.row(t) = stats.predictive.transpose();
  }
}

struct EncoderScore {
  double rate;
  double distortion;
};

EncoderScore score_encoder(const MatrixXd& encoder, const HistogramStats& stats) {
  MatrixXd joint_ht = stats.p_h.asDiagonal() * encoder;
  MatrixXd joint_tx = encoder.transpose() * stats.p_xh;
  EncoderScore out;
  out.rate = mutual_information(joint_ht);
  out.distortion = stats.h_x - mutual_information(joint_tx);
  return out;
}

int active_feature_count(const VectorXd& marginal) {
  int n = 0;
  for (Eigen::Index t = 0; t < marginal.size(); ++t)
    if (marginal(t) > 1e-10) ++n;
  return n;
}

// Probability rows with entries on a fixed-step grid, first cell descending.
std::vector<VectorXd> simplex_grid_rows(int dim, int units) {
  std::vector<VectorXd> rows;
  std::vector<Histogram> cells = enumerate_histograms(dim, units);
  rows.reserve(cells.size());
  for (const Histogram& cell : cells) {
    VectorXd row(dim);
    for (int i = 0; i < dim; ++i)
      row(i) = static_cast<double>(cell.counts[static_cast<std::size_t>(i)]) / units;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<Histogram> enumerate_histograms(int alphabet_size, int k) {
  if (alphabet_size < 1)
    throw std::invalid_argument("enumerate_histograms: alphabet must be nonempty");
  if (k < 0) throw std::invalid_argument("enumerate_histograms: k must be nonnegative");
  std::uint64_t count = histogram_count(alphabet_size, k);
  std::vector<Histogram> out;
  out.reserve(count);
  std::vector<int> current(static_cast<std::size_t>(alphabet_size));
  fill_histograms(0, k, current, k, out);
  return out;
}

HistogramStats histogram_stats(const DiscreteFamily& family, int k) {
  if (k < 1) throw std::invalid_argument("histogram_stats: k must be positive");
  const int n_x = family.alphabet_size();
  const int n_params = family.param_count();

  HistogramStats out;
  out.histograms = enumerate_histograms(n_x, k);
  const auto n_h = static_cast<Eigen::Index>(out.histograms.size());
  out.p_h = VectorXd::Zero(n_h);
  out.p_xh = MatrixXd::Zero(n_h, n_x);

  MatrixXd log_lik(n_params, n_x);
  for (int p = 0; p < n_params; ++p)
    for (int x = 0; x < n_x; ++x)
      log_lik(p, x) = family.likelihood(p, x) > 0.0
                          ? std::log(family.likelihood(p, x))
                          : -kInf;

  for (Eigen::Index h = 0; h < n_h; ++h) {
    const Histogram& hist = out.histograms[static_cast<std::size_t>(h)];
    double log_coeff = std::lgamma(static_cast<double>(k) + 1.0);
    for (int x = 0; x < n_x; ++x)
      log_coeff -= std::lgamma(static_cast<double>(hist.counts[static_cast<std::size_t>(x)]) + 1.0);
    for (int p = 0; p < n_params; ++p) {
      if (family.prior(p) <= 0.0) continue;
      double log_pmf = log_coeff;
      for (int x = 0; x < n_x; ++x) {
        int c = hist.counts[static_cast<std::size_t>(x)];
        if (c > 0) log_pmf += c * log_lik(p, x);
      }
      if (log_pmf == -kInf) continue;
      double mass = family.prior(p) * std::exp(log_pmf);
      out.p_h(h) += mass;
      for (int x = 0; x < n_x; ++x)
        out.p_xh(h, x) += mass * family.likelihood(p, x);
    }
  }

  out.predictive = family.likelihood.transpose() * family.prior;
  out.p_x_given_h.resize(n_h, n_x);
  for (Eigen::Index h = 0; h < n_h; ++h) {
    if (out.p_h(h) > 0.0)
      out.p_x_given_h.row(h) = out.p_xh.row(h) / out.p_h(h);
    else
      out.p_x_given_h.row(h) = out.predictive.transpose();
  }

  if (std::abs(out.p_h.sum() - 1.0) > 1e-10)
    throw std::logic_error("histogram_stats: histogram masses do not sum to 1");
  for (Eigen::Index h = 0; h < n_h; ++h)
    if (std::abs(out.p_x_given_h.row(h).sum() - 1.0) > 1e-10)
      throw std::logic_error("histogram_stats: posterior row does not sum to 1");

  out.h_x = entropy_of(out.predictive);
  out.h_x_given_hk = 0.0;
  for (Eigen::Index h = 0; h < n_h; ++h) {
    if (out.p_h(h) <= 0.0) continue;
    out.h_x_given_hk += out.p_h(h) * entropy_of(out.p_x_given_h.row(h).transpose());
  }
  return out;
}

DiscreteIBState ib_update_step(const DiscreteIBState& state,
                               const HistogramStats& stats) {
  const auto n_h = state.encoder.rows();
  const auto n_t = state.encoder.cols();
  const auto n_x = stats.p_xh.cols();
  const double beta = state.beta;

  DiscreteIBState next = state;
  VectorXd log_marginal(n_t);
  for (Eigen::Index t = 0; t < n_t; ++t)
    log_marginal(t) = state.marginal(t) > 0.0 ? std::log(state.marginal(t)) : -kInf;

  VectorXd log_weight(n_t);
  for (Eigen::Index h = 0; h < n_h; ++h) {
    if (stats.p_h(h) <= 0.0) {
      next.encoder.row(h).setConstant(1.0 / static_cast<double>(n_t));
      continue;
    }
    for (Eigen::Index t = 0; t < n_t; ++t) {
      double kl = 0.0;
      for (Eigen::Index x = 0; x < n_x; ++x) {
        double p = stats.p_x_given_h(h, x);
        if (p <= 0.0) continue;
        double q = state.decoder(t, x);
        if (q <= 0.0) {
          kl = kInf;
          break;
        }
        kl += p * std::log(p / q);
      }
      double penalty = beta == 0.0 ? 0.0 : beta * kl;
      log_weight(t) = log_marginal(t) - penalty;
    }
    double peak = log_weight.maxCoeff();
    if (peak == -kInf) {
      next.encoder.row(h).setConstant(1.0 / static_cast<double>(n_t));
      ++next.underflow_resets;
      continue;
    }
    double total = 0.0;
    for (Eigen::Index t = 0; t < n_t; ++t) {
      double w = std::exp(log_weight(t) - peak);
      next.encoder(h, t) = w;
      total += w;
    }
    next.encoder.row(h) /= total;
  }

  refresh_from_encoder(next, stats);
  ++next.iteration;
  return next;
}

double discrete_lagrangian(const DiscreteIBState& state,
                           const HistogramStats& stats) {
  EncoderScore score = score_encoder(state.encoder, stats);
  double i_xt = stats.h_x - score.distortion;
  return score.rate - state.beta * i_xt;
}

DiscreteSolveResult solve_discrete_ib(const HistogramStats& stats, double beta,
                                      int t_size, std::uint64_t seed,
                                      double tol, int max_iter) {
  if (t_size < 1) throw std::invalid_argument("solve_discrete_ib: t_size must be positive");
  if (beta < 0.0) throw std::invalid_argument("solve_discrete_ib: beta must be nonnegative");
  const auto n_h = static_cast<Eigen::Index>(stats.histograms.size());

  DiscreteIBState state;
  state.beta = beta;
  state.encoder.resize(n_h, t_size);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> exp1(1.0);
  for (Eigen::Index h = 0; h < n_h; ++h) {
    if (stats.p_h(h) <= 0.0) {
      state.encoder.row(h).setConstant(1.0 / t_size);
      continue;
    }
    double total = 0.0;
    for (int t = 0; t < t_size; ++t) {
      double w = exp1(rng);
      state.encoder(h, t) = w;
      total += w;
    }
    state.encoder.row(h) /= total;
  }
  refresh_from_encoder(state, stats);

  bool converged = false;
  for (int i = 0; i < max_iter; ++i) {
    DiscreteIBState next = ib_update_step(state, stats);
    double delta =
        (next.encoder - state.encoder).cwiseAbs().rowwise().sum().maxCoeff();
    state = std::move(next);
    if (delta < tol) {
      converged = true;
      break;
    }
  }

  DiscreteSolveResult out;
  EncoderScore score = score_encoder(state.encoder, stats);
  out.point.beta = beta;
  out.point.rate = score.rate;
  out.point.distortion = score.distortion;
  out.point.n_active = active_feature_count(state.marginal);
  out.point.converged = converged;
  out.state = std::move(state);
  return out;
}

DiscreteSolveResult solve_discrete_ib(const DiscreteFamily& family, int k,
                                      double beta, int t_size,
                                      std::uint64_t seed, double tol,
                                      int max_iter) {
  return solve_discrete_ib(histogram_stats(family, k), beta, t_size, seed, tol,
                           max_iter);
}

std::vector<RDPoint> rd_curve_discrete(const DiscreteFamily& family, int k,
                                       const std::vector<double>& beta_grid,
                                       int t_size, std::uint64_t seed,
                                       int restarts, bool hull) {
  if (restarts < 1) throw std::invalid_argument("rd_curve_discrete: need at least one restart");
  const HistogramStats stats = histogram_stats(family, k);
  std::vector<RDPoint> points;
  points.reserve(beta_grid.size());
  for (std::size_t bi = 0; bi < beta_grid.size(); ++bi) {
    DiscreteSolveResult best;
    double best_lagrangian = kInf;
    for (int r = 0; r < restarts; ++r) {
      std::uint64_t run_seed = seed + 9973 * bi + static_cast<std::uint64_t>(r);
      DiscreteSolveResult res = solve_discrete_ib(stats, beta_grid[bi], t_size, run_seed);
      double lagrangian = res.point.rate - beta_grid[bi] * (stats.h_x - res.point.distortion);
      if (lagrangian < best_lagrangian) {
        best_lagrangian = lagrangian;
        best = std::move(res);
      }
    }
    points.push_back(best.point);
  }
  std::stable_sort(points.begin(), points.end(), [](const RDPoint& a, const RDPoint& b) {
    if (a.rate != b.rate) return a.rate < b.rate;
    return a.distortion < b.distortion;
  });
  if (!hull) return points;
  std::vector<double> rate(points.size()), distortion(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    rate[i] = points[i].rate;
    distortion[i] = points[i].distortion;
  }
  std::vector<RDPoint> hulled;
  for (std::size_t idx : lower_hull_indices(rate, distortion))
    hulled.push_back(points[idx]);
  return hulled;
}

std::vector<RDPoint> brute_force_rd_oracle(const DiscreteFamily& family, int k,
                                           int t_size,
                                           const std::vector<double>& rate_budget_grid) {
  if (t_size < 1) throw std::invalid_argument("brute_force_rd_oracle: t_size must be positive");
  if (rate_budget_grid.empty())
    throw std::invalid_argument("brute_force_rd_oracle: empty budget grid");
  const HistogramStats stats = histogram_stats(family, k);
  const auto n_h = static_cast<std::size_t>(stats.histograms.size());

  const std::vector<VectorXd> rows = simplex_grid_rows(t_size, 20);
  double total = 1.0;
  for (std::size_t h = 0; h < n_h; ++h) total *= static_cast<double>(rows.size());
  if (total > 2e7)
    throw std::length_error("brute_force_rd_oracle: encoder grid beyond desk scale");

  // Budgets sorted ascending; best[] kept nonincreasing along that order.
  std::vector<std::size_t> order(rate_budget_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rate_budget_grid[a] < rate_budget_grid[b];
  });
  std::vector<double> sorted_budgets;
  for (std::size_t idx : order) sorted_budgets.push_back(rate_budget_grid[idx]);

  struct Best {
    double rate = 0.0;
    double distortion = kInf;
  };
  std::vector<Best> best(sorted_budgets.size());

  MatrixXd encoder(n_h, t_size);
  std::vector<std::size_t> odometer(n_h, 0);
  while (true) {
    for (std::size_t h = 0; h < n_h; ++h)
      encoder.row(static_cast<Eigen::Index>(h)) = rows[odometer[h]].transpose();
    EncoderScore score = score_encoder(encoder, stats);
    auto from = std::lower_bound(sorted_budgets.begin(), sorted_budgets.end(),
                                 score.rate - 1e-12) -
                sorted_budgets.begin();
    for (std::size_t j = static_cast<std::size_t>(from); j < best.size(); ++j) {
      bool better = score.distortion < best[j].distortion ||
                    (score.distortion == best[j].distortion && score.rate < best[j].rate);
      if (!better) break;  // best[] is nonincreasing beyond this point
      best[j].distortion = score.distortion;
      best[j].rate = score.rate;
    }
    std::size_t pos = 0;
    while (pos < n_h && ++odometer[pos] == rows.size()) odometer[pos++] = 0;
    if (pos == n_h) break;
  }

  std::vector<RDPoint> out(rate_budget_grid.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    RDPoint p;
    p.beta = 0.0;
    p.rate = best[j].rate;
    p.distortion = best[j].distortion;
    p.n_active = t_size;
    out[order[j]] = p;
  }
  return out;
}

}  // namespace ibrd
