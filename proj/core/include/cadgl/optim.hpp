#pragma once

#include <cstddef>
#include <vector>

#include "cadgl/autodiff.hpp"

namespace cadgl {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments, one tensor per parameter in store order.
struct AdamState {
  std::size_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  AdamState() = default;
  explicit AdamState(const ParameterStore& params);
  bool operator==(const AdamState&) const = default;
};

// Bias-corrected Adam update of a single tensor. `t` is the 1-based step.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::size_t t,
                 const AdamOptions& options);

// Advances state.step and updates every parameter from its current grad.
void adam_step(ParameterStore& params, AdamState& state, const AdamOptions& options);

}  // namespace cadgl
