#include "ibrd/scaling.hpp"

#include <algorithm>
#include <cmath>

namespace ibrd {

RateSchedule RateSchedule::constant(double c, double offset) {
  return {Kind::kConstant, c, offset};
}
RateSchedule RateSchedule::log(double c, double offset) {
  return {Kind::kLog, c, offset};
}
RateSchedule RateSchedule::sqrt(double c, double offset) {
  return {Kind::kSqrt, c, offset};
}
RateSchedule RateSchedule::linear(double c, double offset) {
  return {Kind::kLinear, c, offset};
}

double eval_schedule(const RateSchedule& s, double k) {
  double r = s.offset;
  switch (s.kind) {
    case RateSchedule::Kind::kConstant:
      r += s.coefficient;
      break;
    case RateSchedule::Kind::kLog:
      r += s.coefficient * std::log(k);
      break;
    case RateSchedule::Kind::kSqrt:
      r += s.coefficient * std::sqrt(k);
      break;
    case RateSchedule::Kind::kLinear:
      r += s.coefficient * k;
      break;
  }
  return std::max(r, 0.0);
}

std::vector<GapRecord> gap_series(const GaussianModel& model,
                                  const RateSchedule& schedule, int k_max) {
  std::vector<GapRecord> out;
  out.reserve(std::max(k_max, 0));
  for (int k = 1; k <= k_max; ++k) {
    const EntropyTriple tr = entropy_triple(model, k);
    const double target = eval_schedule(schedule, k);
    GapRecord rec;
    rec.k = k;
    rec.rate = target;
    if (target <= 0.0) {
      rec.h_x_given_t = tr.h_x;
    } else {
      const BottleneckEigs eigs = batch_bottleneck_matrix(model, k);
      const BetaForRate bf = beta_for_rate(eigs, target);
      const MatrixXd a = projection_from_eigs(eigs, bf.beta);
      rec.h_x_given_t = distortion_from_projection(
          model, k, a, MatrixXd::Identity(a.rows(), a.rows()));
      rec.n_active = static_cast<int>(a.rows());
      rec.capped = bf.capped;
    }
    rec.h_x_given_xk = tr.h_x_given_xk;
    rec.h_x_given_theta = tr.h_x_given_theta;
    rec.gap_t_xk = rec.h_x_given_t - rec.h_x_given_xk;
    rec.gap_t_theta = rec.h_x_given_t - rec.h_x_given_theta;
    out.push_back(rec);
  }
  return out;
}

}  // namespace ibrd
