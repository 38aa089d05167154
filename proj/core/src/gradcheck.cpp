#include "cadgl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "cadgl/error.hpp"

namespace cadgl {

namespace {
constexpr double kRelErrFloor = 1e-6;
}

double gradient_rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelErrFloor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_diff_check(const std::function<Var()>& f, const std::vector<Var>& leaves,
                                  const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ContractError("finite_diff_check: step must be positive");

  for (const auto& leaf : leaves) {
    Var copy = leaf;
    copy.zero_grad();
  }
  const Var root = f();
  const double f0 = root.value().item();
  backward(root);
  if (const double again = f().value().item(); again != f0) {
    throw ContractError(
        fmt::format("finite_diff_check: function is not deterministic ({} vs {})", f0, again));
  }

  std::vector<Tensor> analytic;
  analytic.reserve(leaves.size());
  for (const auto& leaf : leaves) analytic.push_back(leaf.grad());

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Var leaf = leaves[li];
    Tensor& value = leaf.mutable_value();
    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t c : coords) {
      const double saved = value[c];
      value[c] = saved + options.step;
      const double fp = f().value().item();
      value[c] = saved - options.step;
      const double fm = f().value().item();
      value[c] = saved;
      const double numeric = (fp - fm) / (2.0 * options.step);
      const double err = gradient_rel_err(analytic[li][c], numeric);
      ++report.coords_checked;
      if (err > report.max_rel_err || std::isnan(err)) {
        report.max_rel_err = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
        report.worst_coordinate = fmt::format("leaf {} flat {}: analytic {:.6e} numeric {:.6e}", li,
                                              c, analytic[li][c], numeric);
      }
    }
  }
  report.pass = report.max_rel_err < options.tolerance;
  return report;
}

}  // namespace cadgl
