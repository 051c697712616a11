#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermalcycle/autodiff.hpp"

namespace thermalcycle::diagnostics {

/// Finite-difference step and pass threshold used by every gradient check.
inline constexpr float kGradCheckEps = 1e-3f;
inline constexpr double kGradCheckTolerance = 5e-3;

struct CheckOutcome {
  std::string name;
  bool passed = false;
  double value = 0.0;      ///< measured error or statistic
  double threshold = 0.0;  ///< pass bound for `value`
  std::string detail;
};

/// Names accepted by run_gradcheck, one per differentiable operand of every
/// op plus the two toy networks.
std::vector<std::string> gradcheck_names();

/// Checks one entry of gradcheck_names() on seeded random inputs. The scalar
/// under test is mean(r * (op(x) - op(x0))) with a fixed random r, which has
/// the gradient of mean(r * op(x)) but stays near zero, so its float rounding
/// does not drown the finite difference.
CheckOutcome run_gradcheck(const std::string& name, std::uint64_t seed = 1);

/// Every gradient check followed by quick oracle checks of convolution,
/// receptive field, pool statistics and Adam.
std::vector<CheckOutcome> run_selftest(std::uint64_t seed = 1);

}  // namespace thermalcycle::diagnostics
