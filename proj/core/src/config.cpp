#include "cadgl/config.hpp"

#include <type_traits>

#include <fmt/format.h>

#include "cadgl/error.hpp"

namespace cadgl {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError(fmt::format("lr must be positive, got {}", lr));
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!use_lcp && !use_mcp) {
    throw ConfigError("at least one of use_lcp / use_mcp must be enabled");
  }
  if (latent_dim == 0 || d_hid == 0 || d_out == 0 || t_dim == 0) {
    throw ConfigError("latent_dim, d_hid, d_out and t_dim must be positive");
  }
  if (!(p_e > 0.0 && p_e <= 1.0)) throw ConfigError(fmt::format("p_e must lie in (0, 1], got {}", p_e));
  if (!(leaky_slope >= 0.0)) throw ConfigError("leaky_slope must be non-negative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"latent_dim", c.latent_dim},
          {"d_hid", c.d_hid},
          {"d_out", c.d_out},
          {"t_dim", c.t_dim},
          {"p_e", c.p_e},
          {"max_degree_bucket", c.max_degree_bucket},
          {"leaky_slope", c.leaky_slope},
          {"use_lcp", c.use_lcp},
          {"use_mcp", c.use_mcp},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps}};
}

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
      throw ConfigError(fmt::format("config key '{}' must be a non-negative integer", key));
    }
  }
  try {
    out = j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

}  // namespace

std::vector<std::string> apply_train_config(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::vector<std::string> unknown;
  for (const auto& [key, value] : j.items()) {
    if (key == "lr") read(value, "lr", c.lr);
    else if (key == "epochs") read(value, "epochs", c.epochs);
    else if (key == "seed") read(value, "seed", c.seed);
    else if (key == "latent_dim") read(value, "latent_dim", c.latent_dim);
    else if (key == "d_hid") read(value, "d_hid", c.d_hid);
    else if (key == "d_out") read(value, "d_out", c.d_out);
    else if (key == "t_dim") read(value, "t_dim", c.t_dim);
    else if (key == "p_e") read(value, "p_e", c.p_e);
    else if (key == "max_degree_bucket") read(value, "max_degree_bucket", c.max_degree_bucket);
    else if (key == "leaky_slope") read(value, "leaky_slope", c.leaky_slope);
    else if (key == "use_lcp") read(value, "use_lcp", c.use_lcp);
    else if (key == "use_mcp") read(value, "use_mcp", c.use_mcp);
    else if (key == "adam_beta1") read(value, "adam_beta1", c.adam_beta1);
    else if (key == "adam_beta2") read(value, "adam_beta2", c.adam_beta2);
    else if (key == "adam_eps") read(value, "adam_eps", c.adam_eps);
    else unknown.push_back(key);
  }
  return unknown;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  const auto unknown = apply_train_config(j, c);
  if (!unknown.empty()) throw ConfigError("unknown config key: " + unknown.front());
  c.validate();
  return c;
}

}  // namespace cadgl
