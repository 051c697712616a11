#include "thermalcycle/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>

#include "thermalcycle/image_pool.hpp"
#include "thermalcycle/models.hpp"
#include "thermalcycle/nn_ops.hpp"
#include "thermalcycle/objectives.hpp"
#include "thermalcycle/optimizer.hpp"
#include "thermalcycle/seeding.hpp"

namespace thermalcycle::diagnostics {
namespace {

/// Magnitudes in [lo, hi] with random sign: no coordinate sits within a
/// finite-difference step of zero or of an activation kink.
Tensor signed_values(Shape shape, std::uint64_t seed, float lo = 0.1f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> mag(lo, hi);
  std::bernoulli_distribution sign(0.5);
  Tensor t(shape);
  for (float& v : t.data()) {
    const float m = mag(rng);
    v = sign(rng) ? m : -m;
  }
  return t;
}

Tensor positive_values(Shape shape, std::uint64_t seed, float lo = 0.1f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(shape);
  for (float& v : t.data()) v = u(rng);
  return t;
}

struct Case {
  Tensor x;
  ScalarFn f;
  std::vector<std::size_t> coords;
};

using Op = std::function<Var(const Var&)>;
using CaseFactory = std::function<Case(std::uint64_t)>;

enum class Weights { mixed, positive, ones };

/// mean(r * (op(x) - op(x0))) with a fixed r of mixed sign, positive, or 1. The
/// gradient equals that of mean(r * op(x)), but the scalar stays near zero, so
/// its float32 rounding does not swamp the finite difference.
Case probe(Tensor x0, Op op, std::uint64_t seed, Weights weights = Weights::mixed) {
  const Tensor y0 = op(Var::constant(x0)).value();
  const Var base = Var::constant(y0);
  Tensor r(y0.shape(), 1.0f);
  if (weights == Weights::mixed) r = signed_values(y0.shape(), seed, 0.5f, 1.0f);
  if (weights == Weights::positive) r = positive_values(y0.shape(), seed, 0.5f, 1.0f);
  ScalarFn f = [op, base, rv = Var::constant(r)](const Var& x) { return reduce_mean(mul(sub(op(x), base), rv)); };
  return Case{std::move(x0), std::move(f), {}};
}

const Shape kEwise{2, 4, 8, 8};

CaseFactory unary_case(UnaryKind kind) {
  return [kind](std::uint64_t s) {
    return probe(signed_values(kEwise, s), [kind](const Var& x) { return map_unary(kind, x); }, s + 1);
  };
}

CaseFactory binary_case(EwiseKind kind) {
  // Both operand rules at once: op(x, c1) * r1 + op(c2, x) * r2.
  return [kind](std::uint64_t s) {
    const Var c1 = Var::constant(signed_values(kEwise, s + 2));
    const Var c2 = Var::constant(signed_values(kEwise, s + 3));
    const Var r2 = Var::constant(positive_values(kEwise, s + 4, 1.5f, 2.0f));
    return probe(signed_values(kEwise, s),
                 [kind, c1, c2, r2](const Var& x) { return add(ewise(kind, x, c1), mul(ewise(kind, c2, x), r2)); }, s + 1);
  };
}

CaseFactory activation_case(Activation kind) {
  return [kind](std::uint64_t s) {
    return probe(signed_values(kEwise, s), [kind](const Var& x) { return activation(kind, x); }, s + 1);
  };
}

const ConvSpec kConv{3, 4, 3, 2, 1, PadMode::zero};
const ConvSpec kConvReflect{3, 4, 3, 1, 2, PadMode::reflect};
const ConvTransposeSpec kConvT{4, 3, 3, 2, 1, 1};

enum class Operand { x, w, b };

/// Probes one operand of a three-operand op while the others stay constant.
Case operand_case(const Tensor& x, const Tensor& w, const Tensor& b, Operand which,
                  std::function<Var(const Var&, const Var&, const Var&)> op, std::uint64_t seed,
                  Weights weights = Weights::mixed) {
  const Var cx = Var::constant(x), cw = Var::constant(w), cb = Var::constant(b);
  switch (which) {
    case Operand::x:
      return probe(x, [op, cw, cb](const Var& v) { return op(v, cw, cb); }, seed, weights);
    case Operand::w:
      return probe(w, [op, cx, cb](const Var& v) { return op(cx, v, cb); }, seed, weights);
    case Operand::b:
      break;
  }
  return probe(b, [op, cx, cw](const Var& v) { return op(cx, cw, v); }, seed, weights);
}

// Convolutions sum many products, and with signed data the float32 forward
// error of that sum is large next to its derivative. Positive operands and
// weights keep the terms from cancelling; the forward passes are checked on
// signed data against direct oracles elsewhere.
CaseFactory conv_case(ConvSpec spec, Operand which) {
  return [spec, which](std::uint64_t s) {
    return operand_case(positive_values(Shape{2, spec.in_channels, 7, 7}, s),
                        positive_values(Shape{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel}, s + 2),
                        positive_values(Shape{1, spec.out_channels, 1, 1}, s + 3), which,
                        [spec](const Var& x, const Var& w, const Var& b) { return conv2d(x, w, b, spec); }, s + 1,
                        Weights::positive);
  };
}

CaseFactory conv_transpose_case(Operand which) {
  return [which](std::uint64_t s) {
    const ConvTransposeSpec& spec = kConvT;
    return operand_case(positive_values(Shape{2, spec.in_channels, 4, 4}, s),
                        positive_values(Shape{spec.in_channels, spec.out_channels, spec.kernel, spec.kernel}, s + 2),
                        positive_values(Shape{1, spec.out_channels, 1, 1}, s + 3), which,
                        [](const Var& x, const Var& w, const Var& b) { return conv_transpose2d(x, w, b, kConvT); }, s + 1,
                        Weights::positive);
  };
}

CaseFactory instance_norm_case(Operand which) {
  return [which](std::uint64_t s) {
    return operand_case(signed_values(Shape{2, 3, 4, 4}, s), signed_values(Shape{1, 3, 1, 1}, s + 2, 0.5f, 1.5f),
                        signed_values(Shape{1, 3, 1, 1}, s + 3), which,
                        [](const Var& x, const Var& g, const Var& b) { return instance_norm(x, g, b); }, s + 1);
  };
}

/// Scalar losses are checked directly on a few elements, with inputs kept
/// clear of the loss minimum so every coordinate has a sizeable gradient.
CaseFactory loss_case(std::function<Var(const Var&, const Var&)> loss) {
  return [loss](std::uint64_t s) {
    const Shape shape{1, 1, 2, 3};
    const Tensor x = signed_values(shape, s, 0.3f, 0.7f);
    Tensor other = signed_values(shape, s + 2, 0.3f, 0.7f);
    // Keep |x - other| >= 0.3 so L1 terms never meet their kink.
    for (std::size_t i = 0; i < other.numel(); ++i) other[i] = x[i] + (other[i] > 0 ? 0.3f : -0.3f) + other[i] * 0.5f;
    const Var o = Var::constant(other);
    return Case{x, [loss, o](const Var& v) { return loss(v, o); }, {}};
  };
}

// Toy networks at the training init. Finite differences through a ReLU
// network are only meaningful when no unit crosses its kink within one step,
// so each check perturbs the gain of the first normalisation layer: with zero
// bias that layer scales its pre-activations and cannot change their sign.
const GeneratorSpec kToyGenerator{3, 3, 2, 1, 8};
const DiscriminatorSpec kToyDiscriminator{3, {4, 8}, 4, {2, 1, 1}};

/// Fixed draw of toy weights and inputs used by the network checks.
constexpr std::uint64_t kToyDraw = 6;

CaseFactory generator_case() {
  return [](std::uint64_t s) {
    const std::uint64_t d = s + kToyDraw - 1;
    const ModelParams params = build_generator(kToyGenerator, derive_seed(d, {1}));
    const Tensor x = signed_values(Shape{1, 3, 8, 8}, d);
    const std::string name = "stem.norm.gamma";
    Op op = [params, x, name](const Var& g) {
      BoundParams bound(params, nullptr);
      bound.replace(name, g);
      return square(generator_forward(kToyGenerator, bound, Var::constant(x)));
    };
    return probe(params.at(name), op, d + 1, Weights::ones);
  };
}

CaseFactory discriminator_case() {
  return [](std::uint64_t s) {
    const std::uint64_t d = s + kToyDraw - 1;
    const ModelParams params = build_discriminator(kToyDiscriminator, derive_seed(d, {2}));
    const Var real = Var::constant(signed_values(Shape{1, 3, 16, 16}, d));
    const Var fake = Var::constant(signed_values(Shape{1, 3, 16, 16}, d + 5));
    const std::string name = "layer1.norm.gamma";
    auto heads = [params, real, fake, name](const Var& g) {
      BoundParams bound(params, nullptr);
      bound.replace(name, g);
      return std::make_pair(discriminator_forward(kToyDiscriminator, bound, real),
                            discriminator_forward(kToyDiscriminator, bound, fake));
    };
    // The least-squares discriminator loss minus its value at the start
    // point, term by term, so the scalar stays near zero.
    const auto h0 = heads(Var::constant(params.at(name)));
    const Tensor ones(h0.first.value().shape(), 1.0f);
    const Var real0 = Var::constant(square(sub(h0.first, Var::constant(ones))).value());
    const Var fake0 = Var::constant(square(h0.second).value());
    ScalarFn f = [heads, ones, real0, fake0](const Var& g) {
      const auto h = heads(g);
      const Var real_term = reduce_mean(sub(square(sub(h.first, Var::constant(ones))), real0));
      const Var fake_term = reduce_mean(sub(square(h.second), fake0));
      return scale(add(real_term, fake_term), 0.5f);
    };
    return Case{params.at(name), f, {}};
  };
}

const std::vector<std::pair<std::string, CaseFactory>>& registry() {
  static const std::vector<std::pair<std::string, CaseFactory>> cases = {
      {"add", binary_case(EwiseKind::add)},
      {"sub", binary_case(EwiseKind::sub)},
      {"mul", binary_case(EwiseKind::mul)},
      {"neg", unary_case(UnaryKind::neg())},
      {"square", unary_case(UnaryKind::square())},
      {"abs", unary_case(UnaryKind::abs())},
      {"scale", unary_case(UnaryKind::scale(10.0f))},
      {"softplus", unary_case(UnaryKind::softplus())},
      {"reduce_mean", [](std::uint64_t s) { return Case{signed_values(kEwise, s), [](const Var& x) { return reduce_mean(x); }, {}}; }},
      {"relu", activation_case(Activation::relu())},
      {"leaky_relu", activation_case(Activation::leaky_relu(0.2f))},
      {"tanh", activation_case(Activation::tanh())},
      {"reflection_pad",
       [](std::uint64_t s) { return probe(signed_values(Shape{1, 1, 5, 5}, s), [](const Var& x) { return reflection_pad(x, 2); }, s + 1); }},
      {"conv2d.x", conv_case(kConv, Operand::x)},
      {"conv2d.w", conv_case(kConv, Operand::w)},
      {"conv2d.b", conv_case(kConv, Operand::b)},
      {"conv2d_reflect.x", conv_case(kConvReflect, Operand::x)},
      {"conv_transpose2d.x", conv_transpose_case(Operand::x)},
      {"conv_transpose2d.w", conv_transpose_case(Operand::w)},
      {"conv_transpose2d.b", conv_transpose_case(Operand::b)},
      {"instance_norm.x", instance_norm_case(Operand::x)},
      {"instance_norm.gamma", instance_norm_case(Operand::w)},
      {"instance_norm.beta", instance_norm_case(Operand::b)},
      {"adversarial_g_loss.lsgan", loss_case([](const Var& x, const Var&) { return adversarial_g_loss(x, LossMode::least_squares); })},
      {"adversarial_g_loss.log", loss_case([](const Var& x, const Var&) { return adversarial_g_loss(x, LossMode::log); })},
      {"adversarial_d_loss.lsgan",
       loss_case([](const Var& x, const Var& o) { return adversarial_d_loss(x, o, LossMode::least_squares); })},
      {"adversarial_d_loss.log", loss_case([](const Var& x, const Var& o) { return adversarial_d_loss(o, x, LossMode::log); })},
      {"cycle_loss", loss_case([](const Var& x, const Var& o) { return cycle_loss(o, x, x, o); })},
      {"identity_loss", loss_case([](const Var& x, const Var& o) { return identity_loss(x, o, o, x); })},
      {"generator", generator_case()},
      {"discriminator", discriminator_case()},
  };
  return cases;
}

std::string format_error(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", value);
  return buf;
}

/// Direct-loop cross-correlation with zero padding.
Tensor direct_conv(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  const int oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const int ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  Tensor out(Shape{xs.n, ws.n, oh, ow});
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < ws.n; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = b[co];
          for (int ci = 0; ci < xs.c; ++ci)
            for (int ky = 0; ky < ws.h; ++ky)
              for (int kx = 0; kx < ws.w; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy >= 0 && iy < xs.h && ix >= 0 && ix < xs.w) acc += double(x.at(n, ci, iy, ix)) * w.at(co, ci, ky, kx);
              }
          out.at(n, co, oy, ox) = static_cast<float>(acc);
        }
  return out;
}

CheckOutcome conv_oracle_check(std::uint64_t seed, int cases) {
  std::mt19937_64 rng(seed);
  auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0.0;
  for (int i = 0; i < cases; ++i) {
    const int k = pick(1, 4);
    const int stride = pick(1, 2);
    const int pad = pick(0, k - 1);
    const int size = pick(k, 9);
    const Shape xs{pick(1, 2), pick(1, 4), size, size};
    const ConvSpec spec{xs.c, pick(1, 4), k, stride, pad, PadMode::zero};
    const Tensor x = signed_values(xs, rng());
    const Tensor w = signed_values(Shape{spec.out_channels, xs.c, k, k}, rng());
    const Tensor b = signed_values(Shape{1, spec.out_channels, 1, 1}, rng());
    const Tensor got = conv2d(Var::constant(x), Var::constant(w), Var::constant(b), spec).value();
    worst = std::max(worst, double(max_abs_diff(got, direct_conv(x, w, b, stride, pad))));
  }
  return {"conv2d_vs_direct_loop", worst < 1e-5, worst, 1e-5, std::to_string(cases) + " cases"};
}

CheckOutcome adjoint_check(std::uint64_t seed, int cases) {
  std::mt19937_64 rng(seed);
  auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0.0;
  for (int i = 0; i < cases; ++i) {
    const int k = pick(1, 4);
    const int stride = pick(1, 2);
    const int pad = pick(0, k - 1);
    const int size = pick(k, 9);
    const int cin = pick(1, 3);
    const int cout = pick(1, 3);
    const ConvSpec fwd{cin, cout, k, stride, pad, PadMode::zero};
    const int out = fwd.output_size(size);
    // Output padding recovers the rows that strided conv ignores.
    const int extra = size - ((out - 1) * stride - 2 * pad + k);
    const ConvTransposeSpec adj{cout, cin, k, stride, pad, extra};
    const Tensor u = signed_values(Shape{1, cin, size, size}, rng());
    const Tensor v = signed_values(Shape{1, cout, out, out}, rng());
    const Tensor w = signed_values(Shape{cout, cin, k, k}, rng());
    const Var zero_out = Var::constant(Tensor(Shape{1, cout, 1, 1}));
    const Var zero_in = Var::constant(Tensor(Shape{1, cin, 1, 1}));
    const double lhs = dot(conv2d(Var::constant(u), Var::constant(w), zero_out, fwd).value(), v);
    const double rhs = dot(u, conv_transpose2d(Var::constant(v), Var::constant(w), zero_in, adj).value());
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return {"conv_transpose2d_adjoint", worst < 1e-4, worst, 1e-4, std::to_string(cases) + " cases"};
}

CheckOutcome pool_check(std::uint64_t seed) {
  ImagePool pool(50, seed);
  for (int i = 0; i < 50; ++i) pool.query(Tensor(Shape{1, 1, 1, 1}, float(i)));
  int historical = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    const Tensor probe(Shape{1, 1, 1, 1}, float(1000 + i));
    if (pool.query(probe) != probe) ++historical;
  }
  const double rate = double(historical) / trials;
  return {"pool_historical_rate", std::abs(rate - 0.5) <= 0.03, std::abs(rate - 0.5), 0.03,
          "rate " + std::to_string(rate)};
}

CheckOutcome adam_check() {
  ModelParams p;
  p.tensors.emplace("theta", Tensor(Shape{}, 1.0f));
  GradMap g;
  g.emplace("theta", Tensor(Shape{}, 0.5f));
  AdamState state;
  adam_step(p, g, state, AdamHyper{});
  const double expected = 1.0 - 0.001 * 0.5 / (0.5 + 1e-8);
  const double err = std::abs(double(p.at("theta")[0]) - expected);
  return {"adam_single_step", err < 1e-6, err, 1e-6, {}};
}

}  // namespace

std::vector<std::string> gradcheck_names() {
  std::vector<std::string> names;
  for (const auto& entry : registry()) names.push_back(entry.first);
  return names;
}

CheckOutcome run_gradcheck(const std::string& name, std::uint64_t seed) {
  for (const auto& [key, factory] : registry()) {
    if (key != name) continue;
    const Case c = factory(seed);
    const GradCheckResult r = grad_check(c.f, c.x, kGradCheckEps, c.coords);
    CheckOutcome out{"gradcheck." + name, r.max_rel_error < kGradCheckTolerance, r.max_rel_error, kGradCheckTolerance, {}};
    out.detail = "worst index " + std::to_string(r.worst_index) + " analytic " + format_error(r.analytic) + " numeric " +
                 format_error(r.numeric);
    return out;
  }
  throw std::invalid_argument("unknown gradcheck op '" + name + "'");
}

std::vector<CheckOutcome> run_selftest(std::uint64_t seed) {
  std::vector<CheckOutcome> out;
  for (const std::string& name : gradcheck_names()) out.push_back(run_gradcheck(name, seed));
  out.push_back(conv_oracle_check(seed, 50));
  out.push_back(adjoint_check(seed, 50));
  const auto rf = receptive_field(DiscriminatorSpec{});
  out.push_back({"receptive_field_default", rf.first == 70 && rf.second == 70, double(rf.first), 70.0, {}});
  const int side = DiscriminatorSpec{}.output_size(256);
  out.push_back({"patch_map_side_256", side == 30, double(side), 30.0, {}});
  out.push_back(pool_check(seed));
  out.push_back(adam_check());
  return out;
}

}  // namespace thermalcycle::diagnostics
