#include "cadgl/cli/run_config.hpp"

#include <fstream>

#include <fmt/format.h>

#include "cadgl/dataset_io.hpp"
#include "cadgl/error.hpp"

namespace cadgl::cli {

namespace {

template <typename T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

std::uint64_t get_count(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    throw ConfigError(fmt::format("config key '{}' must be a non-negative integer", key));
  }
  return j.get<std::uint64_t>();
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

nlohmann::ordered_json synth_params_json(const SynthParams& p) {
  nlohmann::ordered_json j;
  j["nodes"] = p.n_drugs;
  j["types"] = p.n_types;
  j["blocks"] = p.n_blocks;
  j["fdim"] = p.f_dim;
  j["pin"] = p.p_in;
  j["pout"] = p.p_out;
  j["seed"] = p.seed;
  return j;
}

SynthParams synth_params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("'synthetic' must be a JSON object");
  SynthParams p;
  for (const auto& [key, value] : j.items()) {
    const std::string name = "synthetic." + key;
    if (key == "nodes") p.n_drugs = get_count(value, name);
    else if (key == "types") p.n_types = get_count(value, name);
    else if (key == "blocks") p.n_blocks = get_count(value, name);
    else if (key == "fdim") p.f_dim = get_count(value, name);
    else if (key == "pin") p.p_in = get_as<double>(value, name);
    else if (key == "pout") p.p_out = get_as<double>(value, name);
    else if (key == "seed") p.seed = get_count(value, name);
    else throw ConfigError(fmt::format("unknown config key '{}'", name));
  }
  try {
    validate(p);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  nlohmann::json rest = nlohmann::json::object();
  for (const auto& [key, value] : j.items()) {
    if (key == "edges") c.edges = resolve(get_as<std::string>(value, key), base_dir);
    else if (key == "features") c.features = resolve(get_as<std::string>(value, key), base_dir);
    else if (key == "synthetic") c.synthetic = synth_params_from_json(value);
    else if (key == "split_ratios") {
      const auto r = get_as<std::vector<double>>(value, key);
      if (r.size() != 3) throw ConfigError("split_ratios must have 3 entries");
      c.split_ratios = {r[0], r[1], r[2]};
    } else if (key == "split_seed") c.split_seed = get_count(value, key);
    else if (key == "allow_missing_features") c.allow_missing_features = get_as<bool>(value, key);
    else if (key == "out_dir") c.out_dir = resolve(get_as<std::string>(value, key), base_dir);
    else rest[key] = value;
  }
  const auto unknown = apply_train_config(rest, c.train);
  if (!unknown.empty()) throw ConfigError(fmt::format("unknown config key '{}'", unknown.front()));
  c.train.validate();

  const bool has_files = c.edges.has_value() || c.features.has_value();
  if (has_files && c.synthetic) {
    throw ConfigError("give either edges/features or synthetic, not both");
  }
  if (has_files && !(c.edges && c.features)) {
    throw ConfigError("edges and features must be given together");
  }
  if (!has_files && !c.synthetic) c.synthetic = SynthParams{};
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return run_config_from_json(j, path.parent_path());
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  const nlohmann::json train = cadgl::to_json(c.train);
  for (const auto& [key, value] : train.items()) j[key] = value;
  if (c.synthetic) {
    j["synthetic"] = synth_params_json(*c.synthetic);
  } else {
    j["edges"] = std::filesystem::absolute(*c.edges).string();
    j["features"] = std::filesystem::absolute(*c.features).string();
  }
  j["split_ratios"] = {c.split_ratios[0], c.split_ratios[1], c.split_ratios[2]};
  j["split_seed"] = c.split_seed;
  j["allow_missing_features"] = c.allow_missing_features;
  j["out_dir"] = std::filesystem::absolute(c.out_dir).string();
  return j;
}

DDIDataset load_run_dataset(const RunConfig& c) {
  if (c.synthetic) return synth_generate(*c.synthetic);
  return load_dataset(*c.edges, *c.features, c.allow_missing_features);
}

}  // namespace cadgl::cli
