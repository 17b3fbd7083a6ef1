#pragma once

#include <cstdint>
#include <vector>

#include "ibrd/model.hpp"

namespace ibrd {

// All count vectors over the alphabet summing to k, first coordinate
// descending; (2, 1) gives [(1,0), (0,1)].  Throws std::length_error when
// the family is beyond desk scale.
std::vector<Histogram> enumerate_histograms(int alphabet_size, int k);

// Exact joint law of the k-sample histogram and the next observation.
struct HistogramStats {
  std::vector<Histogram> histograms;
  VectorXd p_h;            // histogram marginal
  MatrixXd p_xh;           // |H| x |X| joint with the next draw
  MatrixXd p_x_given_h;    // rows sum to 1; predictive row where p_h = 0
  VectorXd predictive;     // p(x) under the prior
  double h_x = 0.0;        // H(X), nats
  double h_x_given_hk = 0.0;  // H(X | histogram), equals H(X | X^k)
};
HistogramStats histogram_stats(const DiscreteFamily& family, int k);

// Alternating-minimization state for compressing the histogram.
struct DiscreteIBState {
  double beta = 0.0;
  MatrixXd encoder;        // |H| x |T|, rows sum to 1
  VectorXd marginal;       // length |T|
  MatrixXd decoder;        // |T| x |X|, rows sum to 1
  int iteration = 0;
  int underflow_resets = 0;  // encoder rows reset to uniform after underflow
};

// One full update: encoder against the current marginal and decoder, then
// marginal and decoder recomputed from the new encoder.
DiscreteIBState ib_update_step(const DiscreteIBState& state,
                               const HistogramStats& stats);

// I(H;T) - beta * I(X;T) from the exact joint; nonincreasing across steps.
double discrete_lagrangian(const DiscreteIBState& state,
                           const HistogramStats& stats);

struct DiscreteSolveResult {
  DiscreteIBState state;
  RDPoint point;  // rate I(H;T), distortion H(X) - I(X;T)
};

DiscreteSolveResult solve_discrete_ib(const DiscreteFamily& family, int k,
                                      double beta, int t_size,
                                      std::uint64_t seed, double tol = 1e-9,
                                      int max_iter = 500000);
DiscreteSolveResult solve_discrete_ib(const HistogramStats& stats, double beta,
                                      int t_size, std::uint64_t seed,
                                      double tol = 1e-9, int max_iter = 500000);

// Best-of-restarts curve over the beta grid, sorted by rate; optionally
// reduced to its lower convex hull.
std::vector<RDPoint> rd_curve_discrete(const DiscreteFamily& family, int k,
                                       const std::vector<double>& beta_grid,
                                       int t_size, std::uint64_t seed,
                                       int restarts, bool hull = false);

// Exhaustive grid search over stochastic encoders with rows on the 0.05-step
// simplex.  For each rate budget returns the least distortion among encoders
// within budget, with the achieving rate (beta is reported as 0).  Large
// instances raise std::length_error.
std::vector<RDPoint> brute_force_rd_oracle(const DiscreteFamily& family, int k,
                                           int t_size,
                                           const std::vector<double>& rate_budget_grid);

}  // namespace ibrd
