#pragma once

#include "thermalcycle/autodiff.hpp"

namespace thermalcycle {

enum class PadMode { zero, reflect };

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  PadMode pad_mode = PadMode::zero;

  /// floor((size + 2 padding - kernel) / stride) + 1; throws when < 1.
  int output_size(int size) const;
};

struct ConvTransposeSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int output_padding = 0;

  /// (size - 1) stride - 2 padding + kernel + output_padding.
  int output_size(int size) const;
};

/// Cross-correlation (no kernel flip) plus per-channel bias.
///
/// x: [N, Cin, H, W], w: [Cout, Cin, k, k], b: [1, Cout, 1, 1].
/// Reflect padding is recorded as a separate reflection_pad node.
Var conv2d(const Var& x, const Var& w, const Var& b, const ConvSpec& spec);

/// Adjoint of conv2d with the same geometry, plus bias.
///
/// x: [N, Cin, H, W], w: [Cin, Cout, k, k], b: [1, Cout, 1, 1]. With a shared
/// kernel and zero bias, <conv2d(u), v> == <u, conv_transpose2d(v)>.
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, const ConvTransposeSpec& spec);

/// Per-(n, c) standardization over H x W with the biased variance, then
/// gamma[c] * xhat + beta[c]. gamma, beta: [1, C, 1, 1].
Var instance_norm(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f);

struct Activation {
  enum class Tag { relu, leaky_relu, tanh };
  Tag tag;
  float slope = 0.0f;

  static Activation relu() { return {Tag::relu}; }
  static Activation leaky_relu(float slope) { return {Tag::leaky_relu, slope}; }
  static Activation tanh() { return {Tag::tanh}; }
};

Var activation(Activation kind, const Var& x);
inline Var relu(const Var& x) { return activation(Activation::relu(), x); }
inline Var leaky_relu(const Var& x, float slope) { return activation(Activation::leaky_relu(slope), x); }
inline Var tanh(const Var& x) { return activation(Activation::tanh(), x); }

/// Mirror padding (edge pixel not repeated) of all four spatial borders.
/// Requires p < H and p < W.
Var reflection_pad(const Var& x, int p);

}  // namespace thermalcycle
