#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "thermalcycle/optimizer.hpp"

using namespace thermalcycle;
using thermalcycle::testing::ScalarAdamReference;

namespace {

Tensor one(float v) { return Tensor::scalar(v); }

ModelParams single(const std::string& name, float v) {
  ModelParams p;
  p.tensors[name] = one(v);
  return p;
}

}  // namespace

TEST(Adam, FirstStepClosedForm) {
  ModelParams p = single("theta", 1.0f);
  AdamState state;
  adam_step(p, {{"theta", one(0.5f)}}, state, AdamHyper{});
  const double expected = 1.0 - 0.001 * 0.5 / (0.5 + 1e-8);
  EXPECT_NEAR(p.at("theta")[0], expected, 1e-6);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, ZeroGradientLeavesThetaButCountsTheStep) {
  ModelParams p = single("theta", 1.25f);
  AdamState state;
  adam_step(p, {{"theta", one(0.0f)}}, state, AdamHyper{});
  EXPECT_EQ(p.at("theta")[0], 1.25f);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, FirstStepMagnitudeIsAboutLr) {
  for (float g : {1e-3f, 0.5f, -3.0f, 250.0f}) {
    ModelParams p = single("theta", 0.0f);
    AdamState state;
    adam_step(p, {{"theta", one(g)}}, state, AdamHyper{});
    const float moved = std::abs(p.at("theta")[0]);
    EXPECT_LE(moved, 0.001f * 1.000001f) << g;
    EXPECT_GE(moved, 0.999f * 0.001f) << g;
  }
}

TEST(Adam, ParametersAreIndependent) {
  ModelParams both;
  both.tensors["a"] = one(0.3f);
  both.tensors["b"] = one(-0.7f);
  ModelParams a = single("a", 0.3f), b = single("b", -0.7f);
  AdamState s_both, s_a, s_b;
  for (int i = 0; i < 5; ++i) {
    const float ga = 0.1f * (i + 1), gb = -0.05f * (i + 2);
    adam_step(both, {{"a", one(ga)}, {"b", one(gb)}}, s_both, AdamHyper{});
    adam_step(a, {{"a", one(ga)}}, s_a, AdamHyper{});
    adam_step(b, {{"b", one(gb)}}, s_b, AdamHyper{});
  }
  EXPECT_EQ(both.at("a"), a.at("a"));
  EXPECT_EQ(both.at("b"), b.at("b"));
}

TEST(Adam, InsertionOrderDoesNotMatter) {
  ModelParams p1, p2;
  p1.tensors["zeta"] = one(1.0f);
  p1.tensors["alpha"] = one(2.0f);
  p2.tensors["alpha"] = one(2.0f);
  p2.tensors["zeta"] = one(1.0f);
  AdamState s1, s2;
  GradMap g1, g2;
  g1["zeta"] = one(0.2f);
  g1["alpha"] = one(-0.4f);
  g2["alpha"] = one(-0.4f);
  g2["zeta"] = one(0.2f);
  adam_step(p1, g1, s1, AdamHyper{});
  adam_step(p2, g2, s2, AdamHyper{});
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(s1, s2);
}

TEST(Adam, QuadraticTraceMatchesReference) {
  ModelParams p = single("theta", 1.0f);
  AdamState state;
  ScalarAdamReference ref;
  double theta_ref = 1.0;
  float previous = 1.0f;
  for (int t = 0; t < 500; ++t) {
    const float theta = p.at("theta")[0];
    adam_step(p, {{"theta", one(2.0f * theta)}}, state, AdamHyper{});
    theta_ref = ref.step(theta_ref, 2.0 * theta_ref);
    ASSERT_NEAR(p.at("theta")[0], theta_ref, 1e-6) << "step " << t + 1;
    EXPECT_LE(std::abs(p.at("theta")[0]), std::abs(previous));
    previous = p.at("theta")[0];
  }
  EXPECT_LT(std::abs(previous), 0.6f);
}

TEST(Adam, GroupsShareOneStep) {
  ModelParams g = single("w", 1.0f), f = single("w", 2.0f);
  const GradMap gg{{"w", one(0.1f)}}, gf{{"w", one(0.2f)}};
  AdamState state;
  const ParamGroup groups[] = {{"G/", &g, &gg}, {"F/", &f, &gf}};
  adam_step(groups, state, AdamHyper{});
  EXPECT_EQ(state.step, 1);
  EXPECT_EQ(state.moments.size(), 2u);
  EXPECT_EQ(state.moments.count("G/w"), 1u);
}

TEST(Adam, RejectsMismatchedGradientKeys) {
  ModelParams p = single("theta", 1.0f);
  AdamState state;
  try {
    adam_step(p, {{"other", one(1.0f)}}, state, AdamHyper{});
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("theta"), std::string::npos) << msg;
    EXPECT_NE(msg.find("other"), std::string::npos) << msg;
  }
}

TEST(Adam, RejectsInvalidHyperparameters) {
  EXPECT_THROW((AdamHyper{0.0f}.validate()), std::invalid_argument);
  EXPECT_THROW((AdamHyper{0.001f, 1.0f}.validate()), std::invalid_argument);
  EXPECT_NO_THROW(AdamHyper{}.validate());
}
