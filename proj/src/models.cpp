#include "thermalcycle/models.hpp"

#include <random>

namespace thermalcycle {

namespace {

constexpr float kInitStd = 0.02f;
constexpr float kLeakySlope = 0.2f;

class ParamBuilder {
 public:
  explicit ParamBuilder(std::uint64_t seed) : rng_(seed) {}

  void conv(const std::string& name, Shape weight_shape, int bias_channels) {
    Tensor w(weight_shape);
    std::normal_distribution<float> normal(0.0f, kInitStd);
    for (float& v : w.data()) v = normal(rng_);
    params_.tensors.emplace(name + ".weight", std::move(w));
    params_.tensors.emplace(name + ".bias", Tensor(Shape{1, bias_channels, 1, 1}, 0.0f));
  }

  void norm(const std::string& name, int channels) {
    params_.tensors.emplace(name + ".gamma", Tensor(Shape{1, channels, 1, 1}, 1.0f));
    params_.tensors.emplace(name + ".beta", Tensor(Shape{1, channels, 1, 1}, 0.0f));
  }

  ModelParams finish() { return std::move(params_); }

 private:
  std::mt19937_64 rng_;
  ModelParams params_;
};

Var conv_layer(const BoundParams& p, const std::string& name, const Var& x, const ConvSpec& spec) {
  return conv2d(x, p[name + ".weight"], p[name + ".bias"], spec);
}

Var norm_layer(const BoundParams& p, const std::string& name, const Var& x) {
  return instance_norm(x, p[name + ".gamma"], p[name + ".beta"]);
}

std::string res_name(int i) { return "res" + std::to_string(i); }

}  // namespace

GeneratorSpec GeneratorSpec::for_image_size(int image_size, int base_filters) {
  GeneratorSpec spec;
  spec.image_size = image_size;
  spec.base_filters = base_filters;
  spec.n_res_blocks = image_size >= 256 ? 9 : 6;
  return spec;
}

void GeneratorSpec::validate() const {
  if (in_channels < 1 || out_channels < 1 || base_filters < 1) {
    throw ShapeError("generator: channel counts must be positive");
  }
  if (n_res_blocks < 1) throw ShapeError("generator: need at least one residual block");
  if (image_size < 4 || image_size % 4 != 0) {
    throw ShapeError("generator: image_size " + std::to_string(image_size) + " must be a positive multiple of 4");
  }
  if (image_size >= 256 && n_res_blocks != 9) {
    throw ShapeError("generator: 9 residual blocks are required at image_size >= 256");
  }
}

void DiscriminatorSpec::validate() const {
  if (in_channels < 1 || kernel < 1 || filters.empty()) throw ShapeError("discriminator: invalid spec");
  if (strides.size() != filters.size() + 1) {
    throw ShapeError("discriminator: need " + std::to_string(filters.size() + 1) + " strides, got " +
                     std::to_string(strides.size()));
  }
  for (int f : filters) {
    if (f < 1) throw ShapeError("discriminator: filter counts must be positive");
  }
  for (int s : strides) {
    if (s < 1) throw ShapeError("discriminator: strides must be positive");
  }
}

int DiscriminatorSpec::output_size(int size) const {
  for (int s : strides) {
    const int span = size + 2 - kernel;
    if (span < 0) return 0;
    size = span / s + 1;
  }
  return size;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : tensors) total += t.numel();
  return total;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

BoundParams::BoundParams(const ModelParams& params, Tape* tape) {
  for (const auto& [name, t] : params.tensors) {
    vars_.emplace(name, tape ? tape->leaf(t) : Var::constant(t));
  }
}

const Var& BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

void BoundParams::replace(const std::string& name, Var var) {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  require_same_shape(it->second.shape(), var.shape(), "BoundParams::replace");
  it->second = std::move(var);
}

std::map<std::string, Tensor> BoundParams::gradients(const Gradients& grads) const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, v] : vars_) out.emplace(name, grads.of(v));
  return out;
}

ModelParams build_generator(const GeneratorSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int f = spec.base_filters;
  ParamBuilder b(seed);
  b.conv("stem.conv", {f, spec.in_channels, 7, 7}, f);
  b.norm("stem.norm", f);
  b.conv("down1.conv", {2 * f, f, 3, 3}, 2 * f);
  b.norm("down1.norm", 2 * f);
  b.conv("down2.conv", {4 * f, 2 * f, 3, 3}, 4 * f);
  b.norm("down2.norm", 4 * f);
  for (int i = 0; i < spec.n_res_blocks; ++i) {
    b.conv(res_name(i) + ".conv1", {4 * f, 4 * f, 3, 3}, 4 * f);
    b.norm(res_name(i) + ".norm1", 4 * f);
    b.conv(res_name(i) + ".conv2", {4 * f, 4 * f, 3, 3}, 4 * f);
    b.norm(res_name(i) + ".norm2", 4 * f);
  }
  // Transposed kernels are [in, out, k, k].
  b.conv("up1.conv", {4 * f, 2 * f, 3, 3}, 2 * f);
  b.norm("up1.norm", 2 * f);
  b.conv("up2.conv", {2 * f, f, 3, 3}, f);
  b.norm("up2.norm", f);
  b.conv("head.conv", {spec.out_channels, f, 7, 7}, spec.out_channels);
  return b.finish();
}

Var residual_block(const BoundParams& p, const std::string& prefix, int channels, const Var& x) {
  const ConvSpec spec{channels, channels, 3, 1, 1, PadMode::reflect};
  Var h = relu(norm_layer(p, prefix + ".norm1", conv_layer(p, prefix + ".conv1", x, spec)));
  h = norm_layer(p, prefix + ".norm2", conv_layer(p, prefix + ".conv2", h, spec));
  return add(x, h);
}

Var generator_forward(const GeneratorSpec& spec, const BoundParams& p, const Var& x) {
  const Shape s = x.shape();
  if (s.h % 4 != 0 || s.w % 4 != 0) {
    throw ShapeError("generator: input height and width must be divisible by 4, got " + std::to_string(s.h) + "x" +
                     std::to_string(s.w));
  }
  if (s.c != spec.in_channels) {
    throw ShapeError("generator: expected " + std::to_string(spec.in_channels) + " input channels, got " +
                     std::to_string(s.c));
  }
  const int f = spec.base_filters;
  Var h = conv_layer(p, "stem.conv", x, {spec.in_channels, f, 7, 1, 3, PadMode::reflect});
  h = relu(norm_layer(p, "stem.norm", h));
  h = relu(norm_layer(p, "down1.norm", conv_layer(p, "down1.conv", h, {f, 2 * f, 3, 2, 1, PadMode::zero})));
  h = relu(norm_layer(p, "down2.norm", conv_layer(p, "down2.conv", h, {2 * f, 4 * f, 3, 2, 1, PadMode::zero})));
  for (int i = 0; i < spec.n_res_blocks; ++i) h = residual_block(p, res_name(i), 4 * f, h);
  h = conv_transpose2d(h, p["up1.conv.weight"], p["up1.conv.bias"], {4 * f, 2 * f, 3, 2, 1, 1});
  h = relu(norm_layer(p, "up1.norm", h));
  h = conv_transpose2d(h, p["up2.conv.weight"], p["up2.conv.bias"], {2 * f, f, 3, 2, 1, 1});
  h = relu(norm_layer(p, "up2.norm", h));
  h = conv_layer(p, "head.conv", h, {f, spec.out_channels, 7, 1, 3, PadMode::reflect});
  return tanh(h);
}

ModelParams build_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamBuilder b(seed);
  int in = spec.in_channels;
  for (std::size_t i = 0; i < spec.filters.size(); ++i) {
    const std::string name = "layer" + std::to_string(i);
    b.conv(name + ".conv", {spec.filters[i], in, spec.kernel, spec.kernel}, spec.filters[i]);
    if (i > 0) b.norm(name + ".norm", spec.filters[i]);
    in = spec.filters[i];
  }
  b.conv("out.conv", {1, in, spec.kernel, spec.kernel}, 1);
  return b.finish();
}

Var discriminator_forward(const DiscriminatorSpec& spec, const BoundParams& p, const Var& x) {
  const Shape s = x.shape();
  if (spec.output_size(s.h) < 1 || spec.output_size(s.w) < 1) {
    throw ShapeError("discriminator: input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " too small to produce a logit map");
  }
  Var h = x;
  int in = spec.in_channels;
  for (std::size_t i = 0; i < spec.filters.size(); ++i) {
    const std::string name = "layer" + std::to_string(i);
    h = conv_layer(p, name + ".conv", h, {in, spec.filters[i], spec.kernel, spec.strides[i], 1, PadMode::zero});
    if (i > 0) h = norm_layer(p, name + ".norm", h);
    h = leaky_relu(h, kLeakySlope);
    in = spec.filters[i];
  }
  return conv_layer(p, "out.conv", h, {in, 1, spec.kernel, spec.strides.back(), 1, PadMode::zero});
}

std::pair<int, int> receptive_field(const DiscriminatorSpec& spec) {
  int rf = 1;
  int jump = 1;
  for (int s : spec.strides) {
    rf += (spec.kernel - 1) * jump;
    jump *= s;
  }
  return {rf, rf};
}

}  // namespace thermalcycle
