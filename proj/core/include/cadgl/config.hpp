#pragma once

#include <cstddef>
#include <cstdint>

#include <nlohmann/json.hpp>

namespace cadgl {

struct TrainConfig {
  double lr = 0.001;
  std::size_t epochs = 300;
  std::uint64_t seed = 0;
  std::size_t latent_dim = 64;
  std::size_t d_hid = 64;
  std::size_t d_out = 64;
  std::size_t t_dim = 32;
  double p_e = 0.8;
  std::size_t max_degree_bucket = 16;
  double leaky_slope = 0.2;
  bool use_lcp = true;
  bool use_mcp = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Throws ConfigError on the first violated invariant.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

inline constexpr double kGraphNormEps = 1e-5;

nlohmann::json to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys raise ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j);
// Applies the keys of `j` that name TrainConfig fields onto `config`;
// returns the keys it did not recognise.
std::vector<std::string> apply_train_config(const nlohmann::json& j, TrainConfig& config);

}  // namespace cadgl
