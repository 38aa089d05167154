#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cadgl/autodiff.hpp"

namespace cadgl {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Tensors with more entries than this are checked on a seeded sample of
  // this many coordinates.
  std::size_t max_coords_per_tensor = 64;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_coordinate;
  std::size_t coords_checked = 0;
  bool pass = true;
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps coordinates
// whose true gradient is ~0 from dividing round-off by round-off.
double gradient_rel_err(double analytic, double numeric);

// Compares the reverse-mode gradient of a scalar function against central
// differences (f(x+h) - f(x-h)) / 2h. The function is rebuilt from the
// current leaf values on each call and must be deterministic; a second
// evaluation at the same point that differs throws ContractError.
GradCheckReport finite_diff_check(const std::function<Var()>& f, const std::vector<Var>& leaves,
                                  const GradCheckOptions& options = {});

}  // namespace cadgl
