#include "thermalcycle/objectives.hpp"

#include <stdexcept>

namespace thermalcycle {

namespace {

Var ones_like(const Var& v) { return Var::constant(Tensor::full_like(v.value(), 1.0f)); }

Var mean_abs_diff(const Var& a, const Var& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
  return reduce_mean(abs(sub(a, b)));
}

}  // namespace

std::string to_string(LossMode mode) { return mode == LossMode::least_squares ? "least_squares" : "log"; }

LossMode parse_loss_mode(const std::string& text) {
  if (text == "least_squares" || text == "lsgan") return LossMode::least_squares;
  if (text == "log") return LossMode::log;
  throw std::invalid_argument("unknown loss mode '" + text + "' (expected lsgan, least_squares or log)");
}

Var adversarial_g_loss(const Var& d_fake, LossMode mode) {
  if (mode == LossMode::least_squares) return reduce_mean(square(sub(d_fake, ones_like(d_fake))));
  // -log sigmoid(z) == softplus(-z)
  return reduce_mean(softplus(neg(d_fake)));
}

Var adversarial_d_loss(const Var& d_real, const Var& d_fake_pooled, LossMode mode) {
  Var real_term;
  Var fake_term;
  if (mode == LossMode::least_squares) {
    real_term = reduce_mean(square(sub(d_real, ones_like(d_real))));
    fake_term = reduce_mean(square(d_fake_pooled));
  } else {
    // -log(1 - sigmoid(z)) == softplus(z)
    real_term = reduce_mean(softplus(neg(d_real)));
    fake_term = reduce_mean(softplus(d_fake_pooled));
  }
  return scale(add(real_term, fake_term), 0.5f);
}

Var cycle_loss(const Var& x, const Var& x_reconstructed, const Var& y, const Var& y_reconstructed) {
  return add(mean_abs_diff(x_reconstructed, x, "cycle_loss"), mean_abs_diff(y_reconstructed, y, "cycle_loss"));
}

Var identity_loss(const Var& y, const Var& g_of_y, const Var& x, const Var& f_of_x) {
  return add(mean_abs_diff(g_of_y, y, "identity_loss"), mean_abs_diff(f_of_x, x, "identity_loss"));
}

Var total_generator_objective(const Var& adv_g_xy, const Var& adv_g_yx, const Var& cyc, const Var& idt,
                              const LossWeights& weights) {
  if (weights.lambda_cycle < 0.0f || weights.lambda_identity < 0.0f) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  Var total = add(add(adv_g_xy, adv_g_yx), scale(cyc, weights.lambda_cycle));
  if (weights.lambda_identity != 0.0f) total = add(total, scale(idt, weights.lambda_identity));
  return total;
}

}  // namespace thermalcycle
