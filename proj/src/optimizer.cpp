#include "thermalcycle/optimizer.hpp"

#include <cmath>
#include <sstream>

namespace thermalcycle {

namespace {

void check_keys(const ParamGroup& group) {
  std::ostringstream missing;
  std::ostringstream extra;
  for (const auto& [name, t] : group.params->tensors) {
    if (!group.grads->contains(name)) missing << ' ' << group.prefix << name;
  }
  for (const auto& [name, g] : *group.grads) {
    auto it = group.params->tensors.find(name);
    if (it == group.params->tensors.end()) {
      extra << ' ' << group.prefix << name;
    } else {
      require_same_shape(it->second.shape(), g.shape(), "adam_step gradient");
    }
  }
  if (!missing.str().empty() || !extra.str().empty()) {
    throw std::invalid_argument("adam_step: gradient keys do not match parameters; missing:" + missing.str() +
                                "; extra:" + extra.str());
  }
}

}  // namespace

void AdamHyper::validate() const {
  if (!(lr > 0.0f) || !(eps > 0.0f) || beta1 < 0.0f || beta1 >= 1.0f || beta2 < 0.0f || beta2 >= 1.0f) {
    throw std::invalid_argument("adam: require lr > 0, eps > 0, 0 <= beta1, beta2 < 1");
  }
}

void adam_step(std::span<const ParamGroup> groups, AdamState& state, const AdamHyper& hyper) {
  hyper.validate();
  for (const ParamGroup& group : groups) check_keys(group);

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const float bias1 = static_cast<float>(1.0 - std::pow(static_cast<double>(hyper.beta1), t));
  const float bias2 = static_cast<float>(1.0 - std::pow(static_cast<double>(hyper.beta2), t));
  const float b1 = hyper.beta1;
  const float b2 = hyper.beta2;

  for (const ParamGroup& group : groups) {
    for (auto& [name, theta] : group.params->tensors) {
      const Tensor& g = group.grads->at(name);
      auto [it, inserted] = state.moments.try_emplace(group.prefix + name);
      AdamMoments& mom = it->second;
      if (inserted) {
        mom.m = Tensor(theta.shape(), 0.0f);
        mom.v = Tensor(theta.shape(), 0.0f);
      } else {
        require_same_shape(mom.m.shape(), theta.shape(), "adam_step moments");
      }
      float* p = theta.raw();
      float* m = mom.m.raw();
      float* v = mom.v.raw();
      const float* gr = g.raw();
      for (std::size_t i = 0; i < theta.numel(); ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * gr[i];
        v[i] = b2 * v[i] + (1.0f - b2) * gr[i] * gr[i];
        const float m_hat = m[i] / bias1;
        const float v_hat = v[i] / bias2;
        p[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
      }
    }
  }
}

void adam_step(ModelParams& params, const GradMap& grads, AdamState& state, const AdamHyper& hyper) {
  const ParamGroup group{"", &params, &grads};
  adam_step(std::span<const ParamGroup>(&group, 1), state, hyper);
}

}  // namespace thermalcycle
