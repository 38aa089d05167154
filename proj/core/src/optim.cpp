#include "cadgl/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cadgl/error.hpp"

namespace cadgl {

AdamState::AdamState(const ParameterStore& params) {
  for (const auto& p : params) {
    m.emplace_back(p.shape());
    v.emplace_back(p.shape());
  }
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::size_t t,
                 const AdamOptions& o) {
  require_same_shape(param.shape(), grad.shape(), "adam_update grad");
  require_same_shape(param.shape(), m.shape(), "adam_update m");
  require_same_shape(param.shape(), v.shape(), "adam_update v");
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * grad[i];
    v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
  }
}

void adam_step(ParameterStore& params, AdamState& state, const AdamOptions& options) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError(fmt::format("adam_step: state for {} tensors, store has {}",
                                     state.m.size(), params.size()));
  }
  ++state.step;
  std::size_t i = 0;
  for (auto& p : params) {
    adam_update(p.mutable_value(), p.grad(), state.m[i], state.v[i], state.step, options);
    ++i;
  }
}

}  // namespace cadgl
