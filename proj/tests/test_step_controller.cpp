#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "vesicle/error.hpp"
#include "vesicle/step_controller.hpp"

using namespace vesicle;

namespace {

ControllerConfig config(double eps, int k = 2) {
  ControllerConfig c;
  c.tolerance = eps;
  c.horizon = 1;
  c.order = k;
  return c;
}

ConservationSample sample(double a_t, double a_new, double a_0, double l_t, double l_new, double l_0) {
  return {a_t, a_new, a_0, l_t, l_new, l_0};
}

}  // namespace

TEST(StepController, ZeroLocalErrorAccepts) {
  const auto c = config(1e-2);
  EXPECT_TRUE(accept_step(sample(1, 1, 1.001, 2, 2, 2), 0.3, 0.1, c));
}

TEST(StepController, BoundExampleRejects) {
  const auto c = config(1e-2);
  EXPECT_FALSE(channel_accepts(1, 1 + 2.1e-3, 1, 0.5, 0.1, c));
  EXPECT_TRUE(channel_accepts(1, 1 + 1.9e-3, 1, 0.5, 0.1, c));
  EXPECT_FALSE(accept_step(sample(1, 1 + 2.1e-3, 1, 1, 1, 1), 0.5, 0.1, c));
  EXPECT_FALSE(accept_step(sample(1, 1, 1, 1, 1 - 2.1e-3, 1), 0.5, 0.1, c));
}

TEST(StepController, ExhaustedBudgetRejectsAnyChange) {
  const auto c = config(1e-2);
  // |A(t) − A(0)|/A(t) = ε exactly
  EXPECT_FALSE(channel_accepts(1, 1 + 1e-12, 1.01, 0.2, 0.1, c));
  EXPECT_FALSE(channel_accepts(1, 1 + 1e-12, 1.02, 0.2, 0.1, c));
  EXPECT_EQ(channel_dt_optimal(1, 1, 1.02, 0.2, 0.1, c), c.beta_down * 0.1);
}

TEST(StepController, DtOptimalExamples) {
  const auto c = config(1e-2);
  EXPECT_NEAR(dt_optimal(sample(1, 1 + 1e-3, 1, 1, 1, 1), 0, 0.1, c), 0.1, 1e-14);
  EXPECT_NEAR(dt_optimal(sample(1, 1 + 4e-3, 1, 1, 1, 1), 0, 0.1, c), 0.05, 1e-14);
  EXPECT_TRUE(std::isinf(dt_optimal(sample(1, 1, 1, 1, 1, 1), 0, 0.1, c)));
}

TEST(StepController, DtOptimalTakesTheSmallerChannel) {
  const auto c = config(1e-2);
  EXPECT_NEAR(dt_optimal(sample(1, 1 + 1e-3, 1, 2, 2 + 8e-3, 2), 0, 0.1, c), 0.05, 1e-14);
}

TEST(StepController, NextDtExamples) {
  const auto c = config(1e-2);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(next_dt(0.1, inf, true, c), std::pow(0.9, 0.25) * 0.15, 1e-14);
  EXPECT_NEAR(next_dt(0.1, inf, true, c), 0.14611, 1e-5);
  EXPECT_NEAR(next_dt(0.1, 0.01, true, c), std::pow(0.9, 0.25) * 0.06, 1e-14);
  EXPECT_NEAR(next_dt(0.1, 0.01, true, c), 0.05845, 1e-5);
  for (int k = 1; k <= 4; ++k) {
    const auto ck = config(1e-2, k);
    EXPECT_NEAR(next_dt(0.1, 0.5, false, ck), std::pow(0.9, 1.0 / (2 * k)) * 0.1, 1e-14);
  }
}

TEST(StepController, HorizonClamp) {
  const auto c = config(1e-2);
  EXPECT_EQ(next_dt(0.1, 1.0, true, c, 0.03), 0.03);
  EXPECT_NEAR(next_dt(0.1, 1.0, true, c, 1.0), std::pow(0.9, 0.25) * 0.15, 1e-14);
}

TEST(StepController, TimeAtOrPastHorizonThrows) {
  const auto c = config(1e-2);
  EXPECT_THROW(channel_accepts(1, 1, 1, 1.0, 0.1, c), InvalidInput);
  EXPECT_THROW(dt_optimal(sample(1, 1, 1, 1, 1, 1), 1.5, 0.1, c), InvalidInput);
  EXPECT_THROW(channel_accepts(1, 1, 1, 0.5, 0, c), InvalidInput);
  EXPECT_THROW(channel_accepts(-1, 1, 1, 0.5, 0.1, c), InvalidInput);
  EXPECT_THROW(accept_step(std::span<const ConservationSample>(), 0, 0.1, c), InvalidInput);
}

TEST(StepController, ConfigValidation) {
  EXPECT_NO_THROW(ControllerConfig{}.validate());
  auto c = ControllerConfig{};
  c.beta_down = 1.2;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.beta_up = 0.9;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.beta_scale = 1;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.order = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = {};
  c.tolerance = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(StepController, RandomRejectionMonotonicityAndRatioBounds) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 1 + static_cast<int>(4 * u(rng));
    const auto c = config(1e-2, k);
    const double dt = std::pow(10.0, -6 + 6 * u(rng));
    const double dt_opt = trial % 17 == 0 ? std::numeric_limits<double>::infinity()
                                          : dt * std::pow(10.0, -3 + 6 * u(rng));
    const double s = std::pow(c.beta_scale, 1.0 / k);
    const double rejected = next_dt(dt, dt_opt, false, c);
    ASSERT_LT(rejected, dt);
    ASSERT_GE(rejected / dt, s * c.beta_down * (1 - 1e-14));
    const double ratio = next_dt(dt, dt_opt, true, c) / dt;
    ASSERT_GE(ratio, s * c.beta_down * (1 - 1e-14));
    ASSERT_LE(ratio, s * c.beta_up * (1 + 1e-14));
  }
}

TEST(StepController, MultiVesicleIsMostRestrictive) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto c = config(1e-2, 3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ConservationSample> v;
    const int m = 2 + trial % 4;
    for (int j = 0; j < m; ++j) {
      const double a = 1 + 0.5 * u(rng), l = 4 + u(rng);
      v.push_back(sample(a, a * (1 + 3e-3 * u(rng)), a * (1 + 5e-3 * u(rng)), l, l * (1 + 3e-3 * u(rng)),
                         l * (1 + 5e-3 * u(rng))));
    }
    const double t = 0.9 * (u(rng) + 1) / 2, dt = 0.05;
    bool all = true;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : v) {
      all = all && accept_step(s, t, dt, c);
      best = std::min(best, dt_optimal(s, t, dt, c));
    }
    EXPECT_EQ(accept_step(v, t, dt, c), all);
    EXPECT_EQ(dt_optimal(v, t, dt, c), best);
  }
}

TEST(StepController, TelescopedBudgetHoldsOnAcceptedSequence) {
  // Drive accepted steps with the largest local change the bound allows.
  const auto c = config(1e-2);
  const double a0 = 1;
  double a = a0;
  const int m = 37;
  for (int i = 0; i < m; ++i) {
    const double t = static_cast<double>(i) / m, dt = 1.0 / m;
    const double b = c.tolerance - std::abs(a - a0) / a;
    const double change = a * dt / (1 - t) * b * (1 - 1e-9);
    ASSERT_TRUE(channel_accepts(a, a + change, a0, t, dt, c)) << i;
    a += change;
  }
  EXPECT_LE(std::abs(a - a0) / a, c.tolerance);
}
