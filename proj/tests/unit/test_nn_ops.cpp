#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "thermalcycle/nn_ops.hpp"

using namespace thermalcycle;
using thermalcycle::testing::naive_conv2d;
using thermalcycle::testing::random_tensor;

namespace {

Var c(const Tensor& t) { return Var::constant(t); }

Tensor row(std::vector<float> values) {
  const int n = static_cast<int>(values.size());
  return Tensor(Shape{1, 1, 1, n}, std::move(values));
}

}  // namespace

TEST(Conv2d, UnitKernelIsIdentity) {
  const Tensor x = random_tensor(Shape{1, 1, 5, 5}, 1);
  const Tensor out = conv2d(c(x), c(Tensor(Shape{1, 1, 1, 1}, 1.0f)), c(Tensor(Shape{1, 1, 1, 1})),
                            ConvSpec{1, 1, 1, 1, 0}).value();
  EXPECT_EQ(out, x);
}

TEST(Conv2d, ZeroKernelGivesBias) {
  const Tensor x = random_tensor(Shape{1, 2, 6, 6}, 2);
  Tensor b(Shape{1, 3, 1, 1}, std::vector<float>{0.5f, -1.0f, 2.0f});
  const Tensor out = conv2d(c(x), c(Tensor(Shape{3, 2, 3, 3})), c(b), ConvSpec{2, 3, 3, 1, 1}).value();
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < 6; ++y)
      for (int xx = 0; xx < 6; ++xx) EXPECT_EQ(out.at(0, ch, y, xx), b[ch]);
}

TEST(Conv2d, MatchesDirectLoop) {
  const Tensor x = random_tensor(Shape{1, 2, 5, 5}, 3);
  const Tensor w = random_tensor(Shape{4, 2, 3, 3}, 4);
  const Tensor b = random_tensor(Shape{1, 4, 1, 1}, 5);
  const Tensor out = conv2d(c(x), c(w), c(b), ConvSpec{2, 4, 3, 2, 1}).value();
  const Tensor ref = naive_conv2d(x, w, b, 2, 1);
  ASSERT_EQ(out.shape(), (Shape{1, 4, 3, 3}));
  EXPECT_LE(max_abs_diff(out, ref), 1e-5f);
}

TEST(Conv2d, RandomizedAgainstDirectLoop) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const int cin = 1 + rng() % 3, cout = 1 + rng() % 3, k = 1 + rng() % 4, stride = 1 + rng() % 2;
    const int pad = rng() % 2, size = k + rng() % 5;
    const Tensor x = random_tensor(Shape{1 + static_cast<int>(rng() % 2), cin, size, size}, rng());
    const Tensor w = random_tensor(Shape{cout, cin, k, k}, rng());
    const Tensor b = random_tensor(Shape{1, cout, 1, 1}, rng());
    const Tensor out = conv2d(c(x), c(w), c(b), ConvSpec{cin, cout, k, stride, pad}).value();
    EXPECT_LE(max_abs_diff(out, naive_conv2d(x, w, b, stride, pad)), 1e-5f) << "trial " << trial;
  }
}

TEST(Conv2d, ReflectPaddingEqualsExplicitPad) {
  const Tensor x = random_tensor(Shape{1, 2, 6, 6}, 7);
  const Tensor w = random_tensor(Shape{3, 2, 3, 3}, 8);
  const Tensor b = random_tensor(Shape{1, 3, 1, 1}, 9);
  const Tensor out = conv2d(c(x), c(w), c(b), ConvSpec{2, 3, 3, 1, 1, PadMode::reflect}).value();
  const Tensor ref = naive_conv2d(reflection_pad(c(x), 1).value(), w, b, 1, 0);
  EXPECT_LE(max_abs_diff(out, ref), 1e-5f);
}

TEST(Conv2d, RejectsMismatchedChannels) {
  EXPECT_THROW(conv2d(c(Tensor(Shape{1, 2, 4, 4})), c(Tensor(Shape{1, 3, 3, 3})), c(Tensor(Shape{1, 1, 1, 1})),
                      ConvSpec{3, 1, 3, 1, 1}),
               ShapeError);
  EXPECT_THROW(conv2d(c(Tensor(Shape{1, 2, 4, 4})), c(Tensor(Shape{1, 2, 3, 3})), c(Tensor(Shape{1, 2, 1, 1})),
                      ConvSpec{2, 1, 3, 1, 1}),
               ShapeError);
}

TEST(ConvTranspose2d, UnitKernelIsIdentity) {
  const Tensor x = random_tensor(Shape{1, 1, 4, 4}, 10);
  const Tensor out = conv_transpose2d(c(x), c(Tensor(Shape{1, 1, 1, 1}, 1.0f)), c(Tensor(Shape{1, 1, 1, 1})),
                                      ConvTransposeSpec{1, 1, 1, 1, 0, 0}).value();
  EXPECT_EQ(out, x);
}

TEST(ConvTranspose2d, StrideTwoDoublesTheSide) {
  const Tensor out = conv_transpose2d(c(Tensor(Shape{1, 1, 4, 4}, 1.0f)), c(Tensor(Shape{1, 1, 3, 3}, 1.0f)),
                                      c(Tensor(Shape{1, 1, 1, 1})), ConvTransposeSpec{1, 1, 3, 2, 1, 1}).value();
  EXPECT_EQ(out.shape(), (Shape{1, 1, 8, 8}));
}

TEST(ConvTranspose2d, IsTheAdjointOfConv2d) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int cin = 1 + rng() % 3, cout = 1 + rng() % 3, k = 1 + rng() % 4, stride = 1 + rng() % 3;
    const int pad = rng() % k, size = k + 1 + rng() % 6;
    const ConvSpec fwd{cin, cout, k, stride, pad};
    const int out = fwd.output_size(size);
    const int extra = size - ((out - 1) * stride - 2 * pad + k);
    if (extra < 0 || extra >= stride) continue;
    const Tensor u = random_tensor(Shape{1, cin, size, size}, rng());
    const Tensor v = random_tensor(Shape{1, cout, out, out}, rng());
    const Tensor w = random_tensor(Shape{cout, cin, k, k}, rng());
    const Tensor zc(Shape{1, cout, 1, 1}), zt(Shape{1, cin, 1, 1});
    const double lhs = dot(conv2d(c(u), c(w), c(zc), fwd).value(), v);
    const double rhs =
        dot(u, conv_transpose2d(c(v), c(w), c(zt), ConvTransposeSpec{cout, cin, k, stride, pad, extra}).value());
    EXPECT_NEAR(lhs, rhs, 1e-4 * std::max(1.0, std::abs(lhs))) << "trial " << trial;
  }
}

TEST(InstanceNorm, ConstantChannelGoesToZero) {
  const Tensor out = instance_norm(c(Tensor(Shape{1, 2, 4, 4}, 5.0f)), c(Tensor(Shape{1, 2, 1, 1}, 1.0f)),
                                   c(Tensor(Shape{1, 2, 1, 1}))).value();
  for (float v : out.data()) EXPECT_LE(std::abs(v), 1e-3f);
}

TEST(InstanceNorm, ZeroGainGivesBeta) {
  const Tensor out = instance_norm(c(random_tensor(Shape{1, 2, 4, 4}, 12)), c(Tensor(Shape{1, 2, 1, 1})),
                                   c(Tensor(Shape{1, 2, 1, 1}, 7.0f))).value();
  for (float v : out.data()) EXPECT_EQ(v, 7.0f);
}

TEST(InstanceNorm, PerChannelStatistics) {
  const Tensor x = random_tensor(Shape{1, 2, 4, 4}, 13, -3.0f, 5.0f);
  const Tensor out = instance_norm(c(x), c(Tensor(Shape{1, 2, 1, 1}, 1.0f)), c(Tensor(Shape{1, 2, 1, 1}))).value();
  for (int ch = 0; ch < 2; ++ch) {
    double mean = 0.0, var = 0.0, in_mean = 0.0, in_var = 0.0;
    for (int i = 0; i < 16; ++i) in_mean += x.at(0, ch, i / 4, i % 4) / 16.0;
    for (int i = 0; i < 16; ++i) in_var += std::pow(x.at(0, ch, i / 4, i % 4) - in_mean, 2) / 16.0;
    for (int i = 0; i < 16; ++i) {
      mean += out.at(0, ch, i / 4, i % 4) / 16.0;
      // Direct formula with the biased variance.
      const double expected = (x.at(0, ch, i / 4, i % 4) - in_mean) / std::sqrt(in_var + 1e-5);
      EXPECT_NEAR(out.at(0, ch, i / 4, i % 4), expected, 1e-5);
    }
    for (int i = 0; i < 16; ++i) var += std::pow(out.at(0, ch, i / 4, i % 4) - mean, 2) / 16.0;
    EXPECT_LT(std::abs(mean), 1e-5);
    EXPECT_LT(std::abs(var - 1.0), 1e-3);
  }
}

TEST(Activation, HandExamples) {
  EXPECT_EQ(relu(c(row({-1, 0, 2}))).value(), row({0, 0, 2}));
  const Tensor leaky = leaky_relu(c(row({-1, 2})), 0.2f).value();
  EXPECT_FLOAT_EQ(leaky[0], -0.2f);
  EXPECT_EQ(leaky[1], 2.0f);
  EXPECT_EQ(thermalcycle::tanh(c(row({0}))).value(), row({0}));
  Tape tape;
  const Var x = tape.leaf(row({0}));
  EXPECT_EQ(tape.backward(reduce_mean(thermalcycle::tanh(x))).of(x), row({1}));
}

TEST(ReflectionPad, MirrorsWithoutRepeatingTheEdge) {
  const Tensor out = reflection_pad(c(Tensor(Shape{1, 1, 2, 3}, std::vector<float>{1, 2, 3, 1, 2, 3})), 1).value();
  ASSERT_EQ(out.shape(), (Shape{1, 1, 4, 5}));
  for (int y = 0; y < 4; ++y) {
    const std::vector<float> expected{2, 1, 2, 3, 2};
    for (int x = 0; x < 5; ++x) EXPECT_EQ(out.at(0, 0, y, x), expected[x]);
  }
}

TEST(ReflectionPad, ZeroIsIdentityAndCropInverts) {
  const Tensor x = random_tensor(Shape{1, 2, 5, 6}, 14);
  EXPECT_EQ(reflection_pad(c(x), 0).value(), x);
  const Tensor padded = reflection_pad(c(x), 3).value();
  for (int ch = 0; ch < 2; ++ch)
    for (int y = 0; y < 5; ++y)
      for (int xx = 0; xx < 6; ++xx) EXPECT_EQ(padded.at(0, ch, y + 3, xx + 3), x.at(0, ch, y, xx));
}

TEST(ReflectionPad, RejectsPaddingAsLargeAsTheInput) {
  EXPECT_THROW(reflection_pad(c(Tensor(Shape{1, 1, 3, 3})), 3), ShapeError);
}
