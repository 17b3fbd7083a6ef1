#include "ibrd/streaming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>

namespace ibrd {
namespace {

// Covariance between the sample means of rounds i and j (1-based): the later
// mean averages over the earlier one's samples plus fresh noise.
MatrixXd sbar_cross(const GaussianModel& model, int i, int j) {
  return model.sigma_theta + model.sigma_x / static_cast<double>(std::max(i, j));
}

// Everything round k needs about a set of already-fixed feature blocks.
struct CondSet {
  MatrixXd feature_cov;  // covariance among the selected rounds' features
  MatrixXd cross_sbar;   // Cov(sbar_k, features)
  MatrixXd cross_x;      // Cov(X, features)
  Eigen::Index rows = 0;
};

CondSet build_cond(const GaussianModel& model, int k,
                   const std::vector<int>& rounds,
                   const std::vector<MatrixXd>& blocks) {
  const int d = model.dim();
  std::vector<Eigen::Index> offset(rounds.size());
  Eigen::Index total = 0;
  for (std::size_t a = 0; a < rounds.size(); ++a) {
    offset[a] = total;
    total += blocks[rounds[a] - 1].rows();
  }
  CondSet out;
  out.rows = total;
  out.feature_cov = MatrixXd::Identity(total, total);
  out.cross_sbar = MatrixXd::Zero(d, total);
  out.cross_x = MatrixXd::Zero(d, total);
  for (std::size_t a = 0; a < rounds.size(); ++a) {
    const MatrixXd& block_a = blocks[rounds[a] - 1];
    if (block_a.rows() == 0) continue;
    out.cross_sbar.middleCols(offset[a], block_a.rows()) =
        sbar_cross(model, k, rounds[a]) * block_a.transpose();
    out.cross_x.middleCols(offset[a], block_a.rows()) =
        model.sigma_theta * block_a.transpose();
    for (std::size_t b = 0; b < rounds.size(); ++b) {
      const MatrixXd& block_b = blocks[rounds[b] - 1];
      if (block_b.rows() == 0) continue;
      out.feature_cov.block(offset[a], offset[b], block_a.rows(), block_b.rows()) +=
          block_a * sbar_cross(model, rounds[a], rounds[b]) * block_b.transpose();
    }
  }
  return out;
}

std::vector<int> prefix_rounds(int count) {
  std::vector<int> rounds(count);
  std::iota(rounds.begin(), rounds.end(), 1);
  return rounds;
}

struct RoundWork {
  CondSet cond;
  MatrixXd given_t;   // Cov(sbar_k | features)
  MatrixXd given_xt;  // Cov(sbar_k | X, features)
  BottleneckEigs eigs;
};

RoundWork prepare_round(const GaussianModel& model, int k,
                        const std::vector<int>& rounds,
                        const std::vector<MatrixXd>& blocks) {
  const int d = model.dim();
  RoundWork work;
  work.cond = build_cond(model, k, rounds, blocks);
  const MatrixXd sigma_sbar =
      model.sigma_x / static_cast<double>(k) + model.sigma_theta;
  work.given_t =
      conditional_cov(sigma_sbar, work.cond.cross_sbar, work.cond.feature_cov);
  const Eigen::Index r = work.cond.rows;
  MatrixXd big(d + r, d + r);
  big.topLeftCorner(d, d) = model.sigma_x + model.sigma_theta;
  big.topRightCorner(d, r) = work.cond.cross_x;
  big.bottomLeftCorner(r, d) = work.cond.cross_x.transpose();
  big.bottomRightCorner(r, r) = work.cond.feature_cov;
  MatrixXd cross(d, d + r);
  cross.leftCols(d) = model.sigma_theta;
  cross.rightCols(r) = work.cond.cross_sbar;
  work.given_xt = conditional_cov(sigma_sbar, cross, big);
  work.eigs = bottleneck_from_covariances(work.given_xt, work.given_t);
  return work;
}

double rate_of_block(const MatrixXd& a, const MatrixXd& given_t) {
  if (a.rows() == 0) return 0.0;
  const MatrixXd var_feat =
      a * given_t * a.transpose() +
      MatrixXd::Identity(a.rows(), a.rows());
  return 0.5 * logdet_spd(var_feat);
}

// h(X | conditioning features, new feature a * sbar_k + z).
double distortion_of_block(const GaussianModel& model, int k,
                           const CondSet& cond, const MatrixXd& a) {
  const int d = model.dim();
  const Eigen::Index big_r = cond.rows;
  const Eigen::Index r = a.rows();
  const MatrixXd sigma_sbar =
      model.sigma_x / static_cast<double>(k) + model.sigma_theta;
  MatrixXd f_ext(big_r + r, big_r + r);
  f_ext.topLeftCorner(big_r, big_r) = cond.feature_cov;
  const MatrixXd top_right = cond.cross_sbar.transpose() * a.transpose();
  f_ext.topRightCorner(big_r, r) = top_right;
  f_ext.bottomLeftCorner(r, big_r) = top_right.transpose();
  f_ext.bottomRightCorner(r, r) =
      a * sigma_sbar * a.transpose() + MatrixXd::Identity(r, r);
  MatrixXd cross(d, big_r + r);
  cross.leftCols(big_r) = cond.cross_x;
  cross.rightCols(r) = model.sigma_theta * a.transpose();
  return gaussian_entropy(
      conditional_cov(model.sigma_x + model.sigma_theta, cross, f_ext));
}

RoundSolution finish_round(const GaussianModel& model, int k,
                           const RoundWork& work, double beta) {
  RoundSolution sol;
  sol.eigs = work.eigs;
  sol.beta = beta;
  sol.a_k = projection_from_eigs(work.eigs, beta);
  sol.n_active = static_cast<int>(sol.a_k.rows());
  sol.alphas.resize(sol.n_active);
  for (int i = 0; i < sol.n_active; ++i) sol.alphas(i) = sol.a_k.row(i).norm();
  sol.rate = rate_of_block(sol.a_k, work.given_t);
  sol.distortion = distortion_of_block(model, k, work.cond, sol.a_k);
  return sol;
}

void append_round(StreamState& state, const GaussianModel& model,
                  const RoundWork& work, const RoundSolution& sol,
                  bool capped) {
  const int k = state.round + 1;
  const Eigen::Index big_r = work.cond.rows;
  const Eigen::Index r = sol.a_k.rows();
  const MatrixXd sigma_sbar =
      model.sigma_x / static_cast<double>(k) + model.sigma_theta;
  MatrixXd f_ext(big_r + r, big_r + r);
  f_ext.topLeftCorner(big_r, big_r) = work.cond.feature_cov;
  const MatrixXd top_right = work.cond.cross_sbar.transpose() * sol.a_k.transpose();
  f_ext.topRightCorner(big_r, r) = top_right;
  f_ext.bottomLeftCorner(r, big_r) = top_right.transpose();
  f_ext.bottomRightCorner(r, r) =
      sol.a_k * sigma_sbar * sol.a_k.transpose() + MatrixXd::Identity(r, r);
  state.joint_feature_cov = std::move(f_ext);
  state.cross_cov.push_back(work.cond.cross_sbar);
  state.blocks.push_back(sol.a_k);
  state.betas.push_back(sol.beta);
  state.rates.push_back(sol.rate);
  state.distortions.push_back(sol.distortion);
  state.n_active.push_back(sol.n_active);
  state.beta_capped.push_back(capped);
  state.round = k;
}

double policy_beta_fixed_or_listed(const BetaPolicy& policy, int k) {
  if (policy.kind == BetaPolicy::Kind::kFixed) return policy.beta;
  return policy.values[k - 1];
}

void validate_policy(const BetaPolicy& policy, int rounds) {
  switch (policy.kind) {
    case BetaPolicy::Kind::kFixed:
      if (!(policy.beta > 0.0))
        throw std::invalid_argument("BetaPolicy: fixed beta must be positive");
      return;
    case BetaPolicy::Kind::kPerRound:
      if (static_cast<int>(policy.values.size()) != rounds)
        throw std::invalid_argument("BetaPolicy: need one beta per round");
      for (double b : policy.values)
        if (!(b > 0.0))
          throw std::invalid_argument("BetaPolicy: betas must be positive");
      return;
    case BetaPolicy::Kind::kRateBudget:
      if (static_cast<int>(policy.values.size()) != rounds)
        throw std::invalid_argument("BetaPolicy: need one rate budget per round");
      for (double r : policy.values)
        if (r < 0.0)
          throw std::invalid_argument("BetaPolicy: rate budgets must be nonnegative");
      return;
  }
  throw std::invalid_argument("BetaPolicy: unknown kind");
}

// Per-round rates conditioned on the preceding features and distortions
// h(X | t_1..t_l), recomputed from scratch for the current blocks.
void rebuild_accounting(StreamState& state, const GaussianModel& model) {
  const int rounds = state.round;
  state.cross_cov.clear();
  state.rates.assign(rounds, 0.0);
  state.distortions.assign(rounds, 0.0);
  state.n_active.assign(rounds, 0);
  for (int l = 1; l <= rounds; ++l) {
    RoundWork work = prepare_round(model, l, prefix_rounds(l - 1), state.blocks);
    const MatrixXd& block = state.blocks[l - 1];
    state.cross_cov.push_back(work.cond.cross_sbar);
    state.rates[l - 1] = rate_of_block(block, work.given_t);
    state.distortions[l - 1] = distortion_of_block(model, l, work.cond, block);
    state.n_active[l - 1] = static_cast<int>(block.rows());
  }
  state.joint_feature_cov =
      build_cond(model, 1, prefix_rounds(rounds), state.blocks).feature_cov;
}

}  // namespace

BetaPolicy BetaPolicy::fixed(double beta) {
  BetaPolicy policy;
  policy.kind = Kind::kFixed;
  policy.beta = beta;
  return policy;
}

BetaPolicy BetaPolicy::per_round(std::vector<double> betas) {
  BetaPolicy policy;
  policy.kind = Kind::kPerRound;
  policy.values = std::move(betas);
  return policy;
}

BetaPolicy BetaPolicy::rate_budget(std::vector<double> rates) {
  BetaPolicy policy;
  policy.kind = Kind::kRateBudget;
  policy.values = std::move(rates);
  return policy;
}

std::pair<MatrixXd, MatrixXd> conditional_covariances(const GaussianModel& model,
                                                      int k,
                                                      const StreamState& state) {
  if (k < 1)
    throw std::invalid_argument("conditional_covariances: k must be positive");
  RoundWork work =
      prepare_round(model, k, prefix_rounds(state.round), state.blocks);
  return {work.given_t, work.given_xt};
}

RoundSolution online_round(const GaussianModel& model, int k,
                           const StreamState& state, double beta) {
  if (k < 1) throw std::invalid_argument("online_round: k must be positive");
  if (!(beta > 0.0))
    throw std::invalid_argument("online_round: beta must be positive");
  RoundWork work =
      prepare_round(model, k, prefix_rounds(state.round), state.blocks);
  return finish_round(model, k, work, beta);
}

RoundBeta beta_for_round_rate(const GaussianModel& model, int k,
                              const StreamState& state, double target_rate,
                              double tol) {
  if (target_rate < 0.0)
    throw std::invalid_argument("beta_for_round_rate: target must be nonnegative");
  RoundWork work =
      prepare_round(model, k, prefix_rounds(state.round), state.blocks);
  const BetaForRate found = beta_for_rate(work.eigs, target_rate, tol);
  return {found.beta, found.capped};
}

StreamState run_online(const GaussianModel& model, int rounds,
                       const BetaPolicy& policy) {
  if (rounds < 1) throw std::invalid_argument("run_online: rounds must be positive");
  validate_policy(policy, rounds);
  StreamState state;
  state.joint_feature_cov.resize(0, 0);
  for (int k = 1; k <= rounds; ++k) {
    RoundWork work =
        prepare_round(model, k, prefix_rounds(state.round), state.blocks);
    double beta;
    bool capped = false;
    if (policy.kind == BetaPolicy::Kind::kRateBudget) {
      const BetaForRate found = beta_for_rate(work.eigs, policy.values[k - 1]);
      beta = found.beta;
      capped = found.capped;
    } else {
      beta = policy_beta_fixed_or_listed(policy, k);
    }
    RoundSolution sol = finish_round(model, k, work, beta);
    append_round(state, model, work, sol, capped);
  }
  return state;
}

StreamState run_twopass(const GaussianModel& model, int rounds,
                        const BetaPolicy& policy, int passes) {
  if (rounds < 2)
    throw std::invalid_argument("run_twopass: needs at least two rounds");
  if (passes < 1)
    throw std::invalid_argument("run_twopass: passes must be positive");
  StreamState state = run_online(model, rounds, policy);
  std::vector<int> all_rounds = prefix_rounds(rounds);
  for (int sweep = 0; sweep < passes; ++sweep) {
    for (int k = rounds - 1; k >= 1; --k) {
      std::vector<int> others;
      others.reserve(rounds - 1);
      for (int j : all_rounds)
        if (j != k) others.push_back(j);
      RoundWork work = prepare_round(model, k, others, state.blocks);
      double beta;
      bool capped = false;
      if (policy.kind == BetaPolicy::Kind::kRateBudget) {
        const BetaForRate found = beta_for_rate(work.eigs, policy.values[k - 1]);
        beta = found.beta;
        capped = found.capped;
      } else {
        beta = policy_beta_fixed_or_listed(policy, k);
      }
      state.blocks[k - 1] = projection_from_eigs(work.eigs, beta);
      state.betas[k - 1] = beta;
      state.beta_capped[k - 1] = capped;
    }
  }
  rebuild_accounting(state, model);
  return state;
}

TotalAccounting total_accounting(const StreamState& state) {
  TotalAccounting out;
  for (double r : state.rates) out.total_rate += r;
  for (double d : state.distortions) out.sum_regret += d;
  return out;
}

namespace {

struct K2Eval {
  double rate1, rate2, h1, h2;
};

// Closed-form rates and conditional entropies for the two-round scalar
// design.  Unit feature noise both rounds keeps every log argument >= 1.
K2Eval eval_k2(double sx, double st, double a1, double a21, double a22) {
  const double two_pi_e = 2.0 * M_PI * std::exp(1.0);
  const double s11 = st + sx;
  const double s22 = st + sx / 2.0;
  const double s12 = st + sx / 2.0;
  const double vx = st + sx;
  const double vt1 = a1 * a1 * s11 + 1.0;
  const double ct1x = a1 * st;
  const double ct1s2 = a1 * s12;
  const double vt2 =
      a21 * a21 * s22 + a22 * a22 * vt1 + 2.0 * a21 * a22 * ct1s2 + 1.0;
  const double ct12 = a21 * ct1s2 + a22 * vt1;
  const double ct2x = a21 * st + a22 * ct1x;
  K2Eval out;
  out.rate1 = 0.5 * std::log(vt1);
  const double v2g1 = vt2 - ct12 * ct12 / vt1;
  out.rate2 = 0.5 * std::log(v2g1);
  const double vxg1 = vx - ct1x * ct1x / vt1;
  out.h1 = 0.5 * std::log(two_pi_e * vxg1);
  const double cx2g1 = ct2x - ct1x * ct12 / vt1;
  const double vxg12 = vxg1 - cx2g1 * cx2g1 / v2g1;
  out.h2 = 0.5 * std::log(two_pi_e * vxg12);
  return out;
}

struct NMOut {
  VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  bool converged = false;
};

template <typename F>
NMOut nelder_mead(const F& fn, const VectorXd& x0, double step, int max_evals) {
  const int n = static_cast<int>(x0.size());
  const auto safe = [&fn](const VectorXd& v) {
    const double val = fn(v);
    return std::isfinite(val) ? val : std::numeric_limits<double>::infinity();
  };
  std::vector<std::pair<double, VectorXd>> sim;
  sim.reserve(n + 1);
  sim.emplace_back(safe(x0), x0);
  for (int i = 0; i < n; ++i) {
    VectorXd x = x0;
    x(i) += step;
    sim.emplace_back(safe(x), x);
  }
  int evals = n + 1;
  const auto by_f = [](const std::pair<double, VectorXd>& a,
                       const std::pair<double, VectorXd>& b) {
    return a.first < b.first;
  };
  std::sort(sim.begin(), sim.end(), by_f);
  NMOut out;
  while (evals < max_evals) {
    if (sim.back().first - sim.front().first <
        1e-12 * (1.0 + std::abs(sim.front().first))) {
      out.converged = true;
      break;
    }
    VectorXd centroid = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += sim[i].second;
    centroid /= static_cast<double>(n);
    const VectorXd worst = sim[n].second;
    const VectorXd xr = centroid + (centroid - worst);
    const double fr = safe(xr);
    ++evals;
    if (fr < sim[0].first) {
      const VectorXd xe = centroid + 2.0 * (centroid - worst);
      const double fe = safe(xe);
      ++evals;
      sim[n] = fe < fr ? std::make_pair(fe, xe) : std::make_pair(fr, xr);
    } else if (fr < sim[n - 1].first) {
      sim[n] = {fr, xr};
    } else {
      bool shrink = false;
      if (fr < sim[n].first) {
        const VectorXd xc = centroid + 0.5 * (xr - centroid);
        const double fc = safe(xc);
        ++evals;
        if (fc <= fr) sim[n] = {fc, xc}; else shrink = true;
      } else {
        const VectorXd xc = centroid - 0.5 * (centroid - worst);
        const double fc = safe(xc);
        ++evals;
        if (fc < sim[n].first) sim[n] = {fc, xc}; else shrink = true;
      }
      if (shrink) {
        for (int i = 1; i <= n; ++i) {
          sim[i].second = sim[0].second + 0.5 * (sim[i].second - sim[0].second);
          sim[i].first = safe(sim[i].second);
        }
        evals += n;
      }
    }
    std::sort(sim.begin(), sim.end(), by_f);
  }
  out.x = sim[0].second;
  out.f = sim[0].first;
  return out;
}

}  // namespace

K2Result comprehensive_k2_scalar(const GaussianModel& model,
                                 const std::vector<double>& weights,
                                 const ComprehensiveConfig& config) {
  if (model.dim() != 1)
    throw std::invalid_argument("comprehensive_k2_scalar: scalar models only");
  if (weights.empty())
    throw std::invalid_argument("comprehensive_k2_scalar: no trade-off weights");
  const double sx = model.sigma_x(0, 0);
  const double st = model.sigma_theta(0, 0);
  const double h_x = gaussian_entropy(model.sigma_x + model.sigma_theta);

  K2Result out;
  out.points.reserve(weights.size());
  for (std::size_t wi = 0; wi < weights.size(); ++wi) {
    const double w = weights[wi];
    if (w < 0.0)
      throw std::invalid_argument("comprehensive_k2_scalar: negative weight");
    const auto objective = [&](const VectorXd& v) {
      const K2Eval e = eval_k2(sx, st, v(0), v(1), v(2));
      return (e.rate1 + e.rate2) - w * ((h_x - e.h1) + (h_x - e.h2));
    };
    NMOut best;
    const double spread = std::max(2.0, std::sqrt(w));
    for (int s = 0; s < config.starts; ++s) {
      VectorXd x0 = VectorXd::Zero(3);
      if (s > 0) {
        std::mt19937_64 rng(config.seed + 1000003ull * wi +
                            static_cast<std::uint64_t>(s));
        std::normal_distribution<double> normal(0.0, spread);
        for (int i = 0; i < 3; ++i) x0(i) = normal(rng);
      }
      const NMOut run = nelder_mead(objective, x0, 0.5, config.max_evals);
      if (run.f < best.f) best = run;
    }
    K2Point point;
    point.weight = w;
    point.a1 = best.x(0);
    point.a21 = best.x(1);
    point.a22 = best.x(2);
    const K2Eval e = eval_k2(sx, st, point.a1, point.a21, point.a22);
    point.total_rate = e.rate1 + e.rate2;
    point.sum_regret = e.h1 + e.h2;
    point.converged = best.converged;
    out.points.push_back(point);
  }

  std::vector<CurvePoint> cloud;
  cloud.reserve(out.points.size());
  for (const K2Point& p : out.points)
    cloud.push_back({p.total_rate, p.sum_regret});
  out.hull = convex_hull_lower(cloud);
  return out;
}

}  // namespace ibrd
