#pragma once

#include <cmath>

#include "cadgl/random.hpp"
#include "cadgl/tensor.hpp"

namespace cadgl {

// Uniform(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(fan_in, fan_out);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace cadgl
