#include "doctest.h"

#include <cmath>

#include "ibrd/scaling.hpp"

using namespace ibrd;

namespace {

GaussianModel unit_scalar_model() {
  MatrixXd one(1, 1);
  one << 1.0;
  return GaussianModel(one, one);
}

// Hand derivation for the scalar unit model.  The single bottleneck component
// has lambda(k) = (k+2)/(2(k+1)) and Var(X|X^k) = Var(X) lambda(k); a rate-R
// unit-noise feature of the sample mean leaves
// Var(X|T) = Var(X) (lambda + (1-lambda) e^{-2R}), so the entropy gap is
// 0.5 log(1 + ((1-lambda)/lambda) e^{-2R}) with (1-lambda)/lambda = k/(k+2).
double scalar_gap_oracle(int k, double rate) {
  const double ratio = static_cast<double>(k) / (k + 2);
  return 0.5 * std::log1p(ratio * std::exp(-2.0 * rate));
}

}  // namespace

TEST_CASE("schedule evaluation matches the closed forms") {
  CHECK(eval_schedule(RateSchedule::log(1.0), 1.0) == 0.0);
  CHECK(eval_schedule(RateSchedule::log(1.0), std::exp(2.0)) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(eval_schedule(RateSchedule::constant(2.0), 1.0) == 2.0);
  CHECK(eval_schedule(RateSchedule::constant(2.0), 37.0) == 2.0);
  CHECK(eval_schedule(RateSchedule::sqrt(0.5), 4.0) == doctest::Approx(1.0));
  CHECK(eval_schedule(RateSchedule::linear(0.1), 10.0) ==
        doctest::Approx(1.0));
  CHECK(eval_schedule(RateSchedule::log(2.0, 0.25), std::exp(1.0)) ==
        doctest::Approx(2.25));

  SUBCASE("negative values clamp to zero") {
    CHECK(eval_schedule(RateSchedule::constant(-3.0), 5.0) == 0.0);
    CHECK(eval_schedule(RateSchedule::log(1.0, -0.5), 1.0) == 0.0);
    CHECK(eval_schedule(RateSchedule::linear(0.1, -0.3), 2.0) == 0.0);
    CHECK(eval_schedule(RateSchedule::linear(0.1, -0.3), 4.0) ==
          doctest::Approx(0.1));
  }
}

TEST_CASE("zero budget keeps the marginal entropy at every k") {
  GaussianModel model = random_gaussian_model(2, 5);
  const double h_x = gaussian_entropy(model.sigma_x + model.sigma_theta);
  const auto series = gap_series(model, RateSchedule::constant(0.0), 8);
  REQUIRE(series.size() == 8);
  for (const GapRecord& rec : series) {
    CHECK(rec.rate == 0.0);
    CHECK(rec.h_x_given_t == doctest::Approx(h_x).epsilon(1e-12));
    CHECK(rec.gap_t_theta ==
          doctest::Approx(series.front().gap_t_theta).epsilon(1e-12));
    CHECK(rec.gap_t_xk >= -1e-9);
  }
}

TEST_CASE("log budget on the scalar fixture matches the hand-derived gap") {
  GaussianModel model = unit_scalar_model();
  const RateSchedule schedule = RateSchedule::log(1.0);
  const auto series = gap_series(model, schedule, 50);
  REQUIRE(series.size() == 50);
  for (const GapRecord& rec : series) {
    CHECK(rec.rate == doctest::Approx(eval_schedule(schedule, rec.k)));
    CHECK(rec.gap_t_xk ==
          doctest::Approx(scalar_gap_oracle(rec.k, rec.rate)).epsilon(1e-6));
  }

  SUBCASE("the gap crosses 1e-2 between six and seven samples") {
    CHECK(series[5].gap_t_xk > 1e-2);
    for (const GapRecord& rec : series)
      if (rec.k >= 7) CHECK(rec.gap_t_xk <= 1e-2);
    CHECK(series[49].gap_t_xk < 2e-4);
  }
}

TEST_CASE("constant budgets keep a positive floor while growing ones vanish") {
  GaussianModel model = unit_scalar_model();
  const auto flat = gap_series(model, RateSchedule::constant(1.5), 50);
  CHECK(flat[49].gap_t_xk > 1e-2);
  CHECK(flat[49].gap_t_xk ==
        doctest::Approx(scalar_gap_oracle(50, 1.5)).epsilon(1e-6));

  const auto root = gap_series(model, RateSchedule::sqrt(0.5), 50);
  const auto line = gap_series(model, RateSchedule::linear(0.1), 50);
  CHECK(root[49].gap_t_xk < 1e-2);
  CHECK(line[49].gap_t_xk < 1e-3);

  // The flat budget's gap climbs toward its positive limit: the uncompressed
  // baseline keeps improving with k while the rate-capped features saturate.
  for (int i = 1; i < 50; ++i)
    CHECK(flat[i].gap_t_xk >= flat[i - 1].gap_t_xk - 1e-12);
  CHECK(flat[49].gap_t_xk > root[49].gap_t_xk);
}

TEST_CASE("entropy orderings hold on a random model") {
  GaussianModel model = random_gaussian_model(3, 7);
  const auto series = gap_series(model, RateSchedule::log(1.0), 20);
  for (const GapRecord& rec : series) {
    CHECK(rec.h_x_given_theta <= rec.h_x_given_xk + 1e-9);
    CHECK(rec.h_x_given_xk <= rec.h_x_given_t + 1e-9);
    CHECK(rec.gap_t_xk >= -1e-9);
    CHECK(rec.gap_t_theta + 1e-9 >= rec.h_x_given_xk - rec.h_x_given_theta);
  }
  // The unlimited-rate baseline itself shrinks toward the noise floor.
  CHECK(series[19].h_x_given_xk - series[19].h_x_given_theta <
        series[0].h_x_given_xk - series[0].h_x_given_theta);
}
