#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ibrd/gaussian_ib.hpp"
#include "ibrd/hull.hpp"
#include "ibrd/model.hpp"

namespace ibrd {

// Trade-off selection for a sequential run: one beta shared by every round,
// an explicit beta per round, or a per-round conditional rate target that is
// inverted by bisection before the round is solved.
struct BetaPolicy {
  enum class Kind { kFixed, kPerRound, kRateBudget };
  Kind kind = Kind::kFixed;
  double beta = 0.0;           // kFixed
  std::vector<double> values;  // kPerRound betas or kRateBudget rates (nats)

  static BetaPolicy fixed(double beta);
  static BetaPolicy per_round(std::vector<double> betas);
  static BetaPolicy rate_budget(std::vector<double> rates);
};

// Bookkeeping for the features emitted so far.  Feature l is
// t_l = blocks[l] * sbar_l + z_l with unit noise, where sbar_l is the mean
// of the first l samples.  rates[l] is the feature rate conditioned on the
// features already sent; distortions[l] is h(X | t_1..t_{l+1}).
struct StreamState {
  int round = 0;
  std::vector<MatrixXd> blocks;    // r_l x d, r_l may be zero
  MatrixXd joint_feature_cov;      // covariance of the stacked features
  std::vector<MatrixXd> cross_cov; // Cov(sbar_l, earlier features)
  std::vector<double> betas;
  std::vector<double> rates;        // nats
  std::vector<double> distortions;  // nats
  std::vector<int> n_active;
  std::vector<bool> beta_capped;    // rate target unreachable at the beta cap
};

// One round's conditional eigen-structure and solution.
struct RoundSolution {
  MatrixXd a_k;
  BottleneckEigs eigs;  // conditioned on the features already sent
  VectorXd alphas;      // row scales of a_k
  double beta = 0.0;
  double rate = 0.0;        // I(sbar_k; t_k | earlier features), nats
  double distortion = 0.0;  // h(X | t_1..t_k), nats
  int n_active = 0;
};

// Covariance of round k's sample mean, conditioned on the features in
// `state` alone and jointly with the test observation.
std::pair<MatrixXd, MatrixXd> conditional_covariances(const GaussianModel& model,
                                                      int k,
                                                      const StreamState& state);

// Solves round k against the history in `state` without modifying it.
RoundSolution online_round(const GaussianModel& model, int k,
                           const StreamState& state, double beta);

struct RoundBeta {
  double beta = 0.0;
  bool capped = false;
};
// Smallest beta whose round-k conditional rate meets target_rate.
RoundBeta beta_for_round_rate(const GaussianModel& model, int k,
                              const StreamState& state, double target_rate,
                              double tol = 1e-8);

// Greedy sequential solution: rounds are solved in order, each conditioned
// on everything already sent.
StreamState run_online(const GaussianModel& model, int rounds,
                       const BetaPolicy& policy);

// Online pass followed by `passes` backward refinement sweeps: block k is
// re-solved conditioned on every other round's features, then the feature
// covariance is rebuilt.  Reported rates stay causal (conditioned on the
// features preceding each round).
StreamState run_twopass(const GaussianModel& model, int rounds,
                        const BetaPolicy& policy, int passes = 1);

struct TotalAccounting {
  double total_rate = 0.0;
  double sum_regret = 0.0;  // cross-entropy loss summed over rounds
};
TotalAccounting total_accounting(const StreamState& state);

// Joint two-round scalar design: T1 = a1*sbar_1 + Z1,
// T2 = a21*sbar_2 + a22*T1 + Z2, optimized by multi-start Nelder-Mead for
// each trade-off weight, minimizing total rate - weight * total relevance.
struct ComprehensiveConfig {
  int starts = 32;
  int max_evals = 2000;
  std::uint64_t seed = 0;
};

struct K2Point {
  double weight = 0.0;
  double a1 = 0.0;
  double a21 = 0.0;
  double a22 = 0.0;
  double total_rate = 0.0;
  double sum_regret = 0.0;
  bool converged = true;
};

struct K2Result {
  std::vector<K2Point> points;     // best point per weight
  std::vector<CurvePoint> hull;    // lower hull of (total_rate, sum_regret)
};

K2Result comprehensive_k2_scalar(const GaussianModel& model,
                                 const std::vector<double>& weights,
                                 const ComprehensiveConfig& config = {});

}  // namespace ibrd
