#pragma once

#include <string>

#include "thermalcycle/autodiff.hpp"

namespace thermalcycle {

/// Adversarial loss family. Least squares is the training default; the log
/// form is the original minimax objective in its non-saturating variant.
enum class LossMode { least_squares, log };

std::string to_string(LossMode mode);
/// Accepts "least_squares"/"lsgan" and "log".
LossMode parse_loss_mode(const std::string& text);

struct LossWeights {
  float lambda_cycle = 10.0f;
  float lambda_identity = 0.0f;
};

/// least_squares: mean((d_fake - 1)^2); log: mean(-log sigmoid(d_fake)).
Var adversarial_g_loss(const Var& d_fake, LossMode mode);

/// least_squares: 0.5 (mean((d_real - 1)^2) + mean(d_fake^2));
/// log: 0.5 (mean(-log sigmoid(d_real)) + mean(-log(1 - sigmoid(d_fake)))).
Var adversarial_d_loss(const Var& d_real, const Var& d_fake_pooled, LossMode mode);

/// mean|x_rec - x| + mean|y_rec - y|.
Var cycle_loss(const Var& x, const Var& x_reconstructed, const Var& y, const Var& y_reconstructed);

/// mean|G(y) - y| + mean|F(x) - x|.
Var identity_loss(const Var& y, const Var& g_of_y, const Var& x, const Var& f_of_x);

/// adv_xy + adv_yx + lambda_cycle cyc + lambda_identity idt. The identity
/// term is left out entirely when its weight is zero.
Var total_generator_objective(const Var& adv_g_xy, const Var& adv_g_yx, const Var& cyc, const Var& idt,
                              const LossWeights& weights);

}  // namespace thermalcycle
