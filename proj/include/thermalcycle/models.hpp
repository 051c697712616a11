#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "thermalcycle/autodiff.hpp"
#include "thermalcycle/nn_ops.hpp"

namespace thermalcycle {

/// Encoder / residual transformer / decoder generator.
struct GeneratorSpec {
  int in_channels = 3;
  int out_channels = 3;
  int base_filters = 64;
  int n_res_blocks = 9;
  int image_size = 256;

  /// 9 blocks at 256 px and above, 6 below.
  static GeneratorSpec for_image_size(int image_size, int base_filters = 64);
  void validate() const;
  bool operator==(const GeneratorSpec&) const = default;
};

/// PatchGAN discriminator: one 4x4 conv per entry of `filters` followed by a
/// 1-channel output conv. `strides` has filters.size() + 1 entries.
struct DiscriminatorSpec {
  int in_channels = 3;
  std::vector<int> filters{64, 128, 256, 512};
  int kernel = 4;
  std::vector<int> strides{2, 2, 2, 1, 1};

  void validate() const;
  /// Side length of the logit map for a square input of side `size`.
  int output_size(int size) const;
  bool operator==(const DiscriminatorSpec&) const = default;
};

/// Named parameter tensors of one network, ordered by name.
struct ModelParams {
  std::map<std::string, Tensor> tensors;

  std::size_t parameter_count() const;
  const Tensor& at(const std::string& name) const;
  bool operator==(const ModelParams&) const = default;
};

/// Parameters placed on a tape (as leaves) or held as constants.
class BoundParams {
 public:
  /// `tape == nullptr` binds every tensor as a constant.
  BoundParams(const ModelParams& params, Tape* tape);

  const Var& operator[](const std::string& name) const;
  const std::map<std::string, Var>& vars() const { return vars_; }

  /// Substitutes `var` for parameter `name` (same shape required), e.g. to
  /// probe a single tensor on a tape while the rest stay constant.
  void replace(const std::string& name, Var var);

  /// Gradient for every parameter; unreached leaves get zeros.
  std::map<std::string, Tensor> gradients(const Gradients& grads) const;

 private:
  std::map<std::string, Var> vars_;
};

ModelParams build_generator(const GeneratorSpec& spec, std::uint64_t seed);
ModelParams build_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed);

/// Output has the input's shape with values in (-1, 1). H and W must be
/// divisible by 4.
Var generator_forward(const GeneratorSpec& spec, const BoundParams& params, const Var& x);

/// Raw logit map [N, 1, h, w].
Var discriminator_forward(const DiscriminatorSpec& spec, const BoundParams& params, const Var& x);

/// One residual block: conv-norm-relu-conv-norm plus the input.
Var residual_block(const BoundParams& params, const std::string& prefix, int channels, const Var& x);

/// Receptive field (height, width) of one output logit:
/// rf += (k - 1) * jump; jump *= stride, from rf = jump = 1.
std::pair<int, int> receptive_field(const DiscriminatorSpec& spec);

}  // namespace thermalcycle
