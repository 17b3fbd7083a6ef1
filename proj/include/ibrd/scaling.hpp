#pragma once

#include <vector>

#include "ibrd/gaussian_ib.hpp"

namespace ibrd {

// Rate budget as a function of the sample count k, in nats.
struct RateSchedule {
  enum class Kind { kConstant, kLog, kSqrt, kLinear };
  Kind kind = Kind::kConstant;
  double coefficient = 0.0;
  double offset = 0.0;

  static RateSchedule constant(double c, double offset = 0.0);
  static RateSchedule log(double c, double offset = 0.0);
  static RateSchedule sqrt(double c, double offset = 0.0);
  static RateSchedule linear(double c, double offset = 0.0);
};

// constant: c + offset; log: c ln k + offset; sqrt: c sqrt(k) + offset;
// linear: c k + offset.  Clamped at zero.
double eval_schedule(const RateSchedule& s, double k);

// One sample count's entry in a rate-vs-distortion-gap sweep.
struct GapRecord {
  int k = 0;
  double rate = 0.0;            // granted budget R(k)
  double h_x_given_t = 0.0;     // distortion of the rate-matched optimum
  double h_x_given_xk = 0.0;    // unlimited-rate baseline
  double h_x_given_theta = 0.0; // noise floor
  double gap_t_xk = 0.0;        // h(X|T) - h(X|X^k)
  double gap_t_theta = 0.0;     // h(X|T) - h(X|theta)
  int n_active = 0;             // retained components at the matched beta
  bool capped = false;          // budget unreachable at the beta cap
};

// For each k = 1..k_max, spends exactly R(k) nats on the best batch features
// of the k-sample mean and records how far the resulting predictive entropy
// sits above the uncompressed and noise-floor baselines.  A zero budget keeps
// no features, so h(X|T) = h(X) there.
std::vector<GapRecord> gap_series(const GaussianModel& model,
                                  const RateSchedule& schedule, int k_max);

}  // namespace ibrd
