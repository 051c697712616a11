#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "thermalcycle/models.hpp"

namespace thermalcycle {

struct AdamHyper {
  float lr = 0.001f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;

  void validate() const;
};

struct AdamMoments {
  Tensor m;
  Tensor v;
  bool operator==(const AdamMoments&) const = default;
};

/// Per-parameter first/second moments plus the shared step counter.
/// Moments are created lazily (zero) on the first step that sees a name.
struct AdamState {
  std::map<std::string, AdamMoments> moments;
  std::int64_t step = 0;
  bool operator==(const AdamState&) const = default;
};

using GradMap = std::map<std::string, Tensor>;

/// Parameters of one network updated under a key prefix ("G/", "F/", ...).
struct ParamGroup {
  std::string prefix;
  ModelParams* params;
  const GradMap* grads;
};

/// One Adam update over every group, counting as a single step:
///   m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// Gradient keys must match each group's parameter names exactly.
void adam_step(std::span<const ParamGroup> groups, AdamState& state, const AdamHyper& hyper);

void adam_step(ModelParams& params, const GradMap& grads, AdamState& state, const AdamHyper& hyper);

}  // namespace thermalcycle
