#include <gtest/gtest.h>

#include <cmath>

#include "slt/errors.hpp"
#include "slt/ops.hpp"
#include "slt/optim.hpp"
#include "test_util.hpp"

using namespace slt;

namespace {

ParameterSet two_params() {
  ParameterSet p;
  p.add("a", Tensor::from({2, 2}, {1.0, -2.0, 0.5, 4.0}, true));
  p.add("b", Tensor::from({3}, {0.1, 0.2, -0.3}, true));
  return p;
}

void set_grad(ParameterSet& p, double value) {
  for (const Tensor& t : p.tensors()) {
    backward(scale(sum(t), value));
  }
}

}  // namespace

TEST(AdamW, ZeroGradientWithoutDecayLeavesParameters) {
  ParameterSet p = two_params();
  set_grad(p, 0.0);
  AdamWState s = AdamWState::zeros_like(p);
  AdamWOptions o;
  o.weight_decay = 0.0;
  adamw_step(p, s, 0.1, o);
  EXPECT_EQ(p.get("a").at({1, 1}), 4.0);
  EXPECT_EQ(p.get("b").at({2}), -0.3);
  EXPECT_EQ(s.step, 1u);
}

TEST(AdamW, DecayIsDecoupled) {
  ParameterSet p = two_params();
  set_grad(p, 0.0);
  AdamWState s = AdamWState::zeros_like(p);
  AdamWOptions o;
  o.weight_decay = 0.01;
  adamw_step(p, s, 0.1, o);
  EXPECT_DOUBLE_EQ(p.get("a").at({0, 1}), -2.0 * 0.999);
  EXPECT_DOUBLE_EQ(p.get("b").at({1}), 0.2 * 0.999);
}

TEST(AdamW, FirstStepOnScalar) {
  for (double wd : {0.0, 0.01}) {
    ParameterSet p;
    p.add("x", Tensor::from({1}, {1.0}, true));
    backward(p.get("x"));  // gradient 1
    AdamWState s = AdamWState::zeros_like(p);
    AdamWOptions o;
    o.weight_decay = wd;
    adamw_step(p, s, 0.1, o);
    // m_hat = v_hat = 1: update lr / (1 + eps) after decay.
    EXPECT_NEAR(p.get("x").item(), 1.0 - 0.1 * wd - 0.1 / (1.0 + 1e-8), 1e-15);
    EXPECT_NEAR(p.get("x").item(), 0.9 - 0.1 * wd, 1e-8);
  }
}

TEST(AdamW, MatchesReferenceRecurrence) {
  ParameterSet p;
  p.add("x", Tensor::from({1}, {0.7}, true));
  AdamWState s = AdamWState::zeros_like(p);
  AdamWOptions o;
  double x = 0.7, m = 0.0, v = 0.0;
  const double grads[] = {0.3, -1.2, 0.05, 2.0};
  for (int t = 1; t <= 4; ++t) {
    p.zero_grad();
    backward(scale(p.get("x"), grads[t - 1]));
    adamw_step(p, s, 0.01, o);
    const double g = grads[t - 1];
    x -= 0.01 * o.weight_decay * x;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    x -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p.get("x").item(), x, 1e-14) << "step " << t;
  }
}

TEST(AdamW, ParametersWithoutGradientAreSkipped) {
  ParameterSet p = two_params();
  backward(sum(p.get("a")));
  AdamWState s = AdamWState::zeros_like(p);
  adamw_step(p, s, 0.1, {});
  EXPECT_EQ(p.get("b").at({0}), 0.1);
  EXPECT_NE(p.get("a").at({0, 0}), 1.0);
}

TEST(AdamW, NonFiniteGradientAborts) {
  ParameterSet p = two_params();
  backward(scale(sum(p.get("a")), std::nan("")));
  AdamWState s = AdamWState::zeros_like(p);
  EXPECT_THROW(adamw_step(p, s, 0.1, {}), NumericError);
  EXPECT_EQ(p.get("a").at({0, 0}), 1.0);
}

TEST(LrSchedule, WarmupThenLinearDecay) {
  EXPECT_EQ(lr_schedule(0, 3e-4, 1000, 5000), 0.0);
  EXPECT_DOUBLE_EQ(lr_schedule(500, 3e-4, 1000, 5000), 1.5e-4);
  EXPECT_DOUBLE_EQ(lr_schedule(1000, 3e-4, 1000, 5000), 3e-4);
  EXPECT_DOUBLE_EQ(lr_schedule(3000, 3e-4, 1000, 5000), 1.5e-4);
  EXPECT_EQ(lr_schedule(5000, 3e-4, 1000, 5000), 0.0);
  EXPECT_EQ(lr_schedule(9000, 3e-4, 1000, 5000), 0.0);
  EXPECT_DOUBLE_EQ(lr_schedule(0, 1e-3, 0, 10), 1e-3);
}

TEST(LrSchedule, PiecewiseMonotone) {
  double prev = -1;
  for (std::size_t t = 0; t <= 100; ++t) {
    const double lr = lr_schedule(t, 1.0, 100, 400);
    EXPECT_GE(lr, prev);
    prev = lr;
  }
  for (std::size_t t = 100; t <= 400; ++t) {
    const double lr = lr_schedule(t, 1.0, 100, 400);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(GradClip, PostClipNormIsBounded) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ParameterSet p;
    p.add("w", slt::testing::random_tensor({4, 5}, seed));
    p.add("u", slt::testing::random_tensor({3}, seed + 50));
    Tensor loss = add(slt::testing::weighted_sum(p.get("w"), seed), scale(slt::testing::weighted_sum(p.get("u"), seed), 5.0));
    backward(loss);
    const double before = grad_norm(p);
    const double reported = clip_grad_norm(p, 1.0);
    EXPECT_DOUBLE_EQ(reported, before);
    EXPECT_LE(grad_norm(p), 1.0 + 1e-6);
    if (before <= 1.0) EXPECT_DOUBLE_EQ(grad_norm(p), before);
  }
}

TEST(Precision, RoundToFloat) {
  ParameterSet p;
  p.add("x", Tensor::from({2}, {0.1, 1.0 / 3.0}, true));
  round_to_float(p);
  EXPECT_EQ(p.get("x").at({0}), static_cast<double>(0.1f));
  EXPECT_EQ(p.get("x").at({1}), static_cast<double>(1.0f / 3.0f));
}
