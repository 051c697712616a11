#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "thermalcycle/objectives.hpp"

using namespace thermalcycle;
using thermalcycle::testing::random_tensor;

namespace {

Var filled(Shape shape, float v) { return Var::constant(Tensor(shape, v)); }
Var scalar(float v) { return Var::constant(Tensor::scalar(v)); }
float value(const Var& v) { return v.value().item(); }

const Shape kMap{1, 1, 30, 30};

}  // namespace

TEST(AdversarialG, LeastSquaresExamples) {
  EXPECT_EQ(value(adversarial_g_loss(filled(kMap, 1.0f), LossMode::least_squares)), 0.0f);
  EXPECT_EQ(value(adversarial_g_loss(filled(kMap, 0.0f), LossMode::least_squares)), 1.0f);
  EXPECT_EQ(value(adversarial_g_loss(filled(kMap, 0.5f), LossMode::least_squares)), 0.25f);
  EXPECT_EQ(value(adversarial_g_loss(filled(Shape{2, 1, 3, 7}, 0.5f), LossMode::least_squares)), 0.25f);
}

TEST(AdversarialD, LeastSquaresExamples) {
  EXPECT_EQ(value(adversarial_d_loss(filled(kMap, 1.0f), filled(kMap, 0.0f), LossMode::least_squares)), 0.0f);
  EXPECT_EQ(value(adversarial_d_loss(filled(kMap, 0.5f), filled(kMap, 0.5f), LossMode::least_squares)), 0.25f);
  EXPECT_EQ(value(adversarial_d_loss(filled(kMap, 0.0f), filled(kMap, 1.0f), LossMode::least_squares)), 1.0f);
}

TEST(AdversarialD, LogFormVanishesForConfidentDiscriminator) {
  const float d = value(adversarial_d_loss(filled(kMap, 40.0f), filled(kMap, -40.0f), LossMode::log));
  EXPECT_GE(d, 0.0f);
  EXPECT_LT(d, 1e-12f);
  EXPECT_NEAR(value(adversarial_d_loss(filled(kMap, 0.0f), filled(kMap, 0.0f), LossMode::log)), std::log(2.0), 1e-6);
}

TEST(AdversarialG, LogFormAtZeroLogit) {
  EXPECT_NEAR(value(adversarial_g_loss(filled(kMap, 0.0f), LossMode::log)), std::log(2.0), 1e-6);
}

TEST(Cycle, PerfectReconstructionIsZero) {
  const Var x = Var::constant(random_tensor(Shape{1, 3, 4, 4}, 1));
  const Var y = Var::constant(random_tensor(Shape{1, 3, 4, 4}, 2));
  EXPECT_EQ(value(cycle_loss(x, x, y, y)), 0.0f);
}

TEST(Cycle, HandL1) {
  EXPECT_FLOAT_EQ(value(cycle_loss(scalar(0.2f), scalar(0.5f), scalar(0.0f), scalar(0.0f))), 0.3f);
}

TEST(Cycle, SymmetricInTheTwoDomains) {
  const Var a = Var::constant(random_tensor(Shape{1, 3, 4, 4}, 3));
  const Var b = Var::constant(random_tensor(Shape{1, 3, 4, 4}, 4));
  const Var c = Var::constant(random_tensor(Shape{1, 3, 4, 4}, 5));
  const Var d = Var::constant(random_tensor(Shape{1, 3, 4, 4}, 6));
  EXPECT_EQ(value(cycle_loss(a, b, c, d)), value(cycle_loss(c, d, a, b)));
}

TEST(Cycle, RejectsShapeMismatch) {
  EXPECT_THROW(cycle_loss(filled(Shape{1, 3, 4, 4}, 0), filled(Shape{1, 3, 4, 5}, 0), scalar(0), scalar(0)),
               ShapeError);
}

TEST(Identity, Examples) {
  const Var x = Var::constant(random_tensor(Shape{1, 3, 4, 4}, 7));
  const Var y = Var::constant(random_tensor(Shape{1, 3, 4, 4}, 8));
  EXPECT_EQ(value(identity_loss(y, y, x, x)), 0.0f);
  EXPECT_EQ(value(identity_loss(scalar(1.0f), scalar(0.0f), scalar(0.0f), scalar(0.0f))), 1.0f);
  EXPECT_THROW(identity_loss(filled(Shape{1, 1, 2, 2}, 0), scalar(0), scalar(0), scalar(0)), ShapeError);
}

TEST(Total, WeightedSum) {
  const Var total = total_generator_objective(scalar(0.3f), scalar(0.4f), scalar(0.05f), scalar(123.0f), LossWeights{});
  EXPECT_NEAR(value(total), 1.2, 1e-6);
  EXPECT_EQ(value(total_generator_objective(scalar(0), scalar(0), scalar(0), scalar(0), LossWeights{})), 0.0f);
}

TEST(Total, ZeroIdentityWeightContributesNothing) {
  const LossWeights w{10.0f, 0.0f};
  const Var a = total_generator_objective(scalar(0.3f), scalar(0.4f), scalar(0.05f), scalar(0.0f), w);
  const Var b = total_generator_objective(scalar(0.3f), scalar(0.4f), scalar(0.05f), scalar(7.5f), w);
  EXPECT_EQ(value(a), value(b));
  const Var c = total_generator_objective(scalar(0.3f), scalar(0.4f), scalar(0.05f), scalar(7.5f), LossWeights{10, 1});
  EXPECT_NEAR(value(c) - value(a), 7.5, 1e-5);
}

TEST(Total, DoublingCycleWeightDoublesOnlyItsTerm) {
  const float adv = 0.3f + 0.4f;
  const float t1 = value(total_generator_objective(scalar(0.3f), scalar(0.4f), scalar(0.05f), scalar(0), {10, 0}));
  const float t2 = value(total_generator_objective(scalar(0.3f), scalar(0.4f), scalar(0.05f), scalar(0), {20, 0}));
  EXPECT_NEAR(t2 - adv, 2.0f * (t1 - adv), 1e-6);
}

TEST(LossMode, ParsesNames) {
  EXPECT_EQ(parse_loss_mode("lsgan"), LossMode::least_squares);
  EXPECT_EQ(parse_loss_mode("least_squares"), LossMode::least_squares);
  EXPECT_EQ(parse_loss_mode("log"), LossMode::log);
  EXPECT_THROW(parse_loss_mode("hinge"), std::invalid_argument);
  EXPECT_EQ(to_string(LossMode::least_squares), "least_squares");
}
