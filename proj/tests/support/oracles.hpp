// Test-only reference implementations. Each one is written straight from the
// defining formula and shares no code path with the library it checks.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "thermalcycle/tensor.hpp"

namespace thermalcycle::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(shape);
  for (float& v : t.data()) v = u(rng);
  return t;
}

/// Values with magnitude in [0.1, 1] and random sign, so no coordinate sits
/// within a finite-difference step of a kink or of zero.
inline Tensor random_away_from_zero(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> mag(0.1f, 1.0f);
  std::bernoulli_distribution sign(0.5);
  Tensor t(shape);
  for (float& v : t.data()) v = sign(rng) ? mag(rng) : -mag(rng);
  return t;
}

/// Direct O(N Cout Cin H' W' k^2) cross-correlation with zero padding.
inline Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  const int k = ws.h;
  const int oh = (xs.h + 2 * pad - k) / stride + 1;
  const int ow = (xs.w + 2 * pad - k) / stride + 1;
  Tensor out(Shape{xs.n, ws.n, oh, ow});
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < ws.n; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = b[co];
          for (int ci = 0; ci < xs.c; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                acc += static_cast<double>(x.at(n, ci, iy, ix)) * w.at(co, ci, ky, kx);
              }
          out.at(n, co, oy, ox) = static_cast<float>(acc);
        }
  return out;
}

/// Adam written out for a single scalar parameter, in double precision.
struct ScalarAdamReference {
  double lr = 0.001, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double m = 0.0, v = 0.0;
  long t = 0;

  double step(double theta, double g) {
    t += 1;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double m_hat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
    const double v_hat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
    return theta - lr * m_hat / (std::sqrt(v_hat) + eps);
  }
};

/// Chi-square statistic of observed counts against a uniform expectation.
inline double chi_square_uniform(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts) total += c;
  const double expected = static_cast<double>(total) / counts.size();
  double chi = 0.0;
  for (long c : counts) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

}  // namespace thermalcycle::testing
