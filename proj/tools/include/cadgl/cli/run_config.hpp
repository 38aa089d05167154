#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "cadgl/config.hpp"
#include "cadgl/dataset.hpp"
#include "cadgl/synth.hpp"

namespace cadgl::cli {

// A run configuration file: the TrainConfig keys at top level, plus the data
// source (either "edges" + "features" paths or a "synthetic" object with the
// synth flags), "split_ratios", "split_seed", "allow_missing_features" and
// "out_dir".
struct RunConfig {
  TrainConfig train;
  std::optional<std::filesystem::path> edges;
  std::optional<std::filesystem::path> features;
  std::optional<SynthParams> synthetic;
  SplitRatios split_ratios{0.6, 0.2, 0.2};
  std::uint64_t split_seed = 0;
  bool allow_missing_features = false;
  std::filesystem::path out_dir = "run";
};

// Unknown keys anywhere raise ConfigError. Relative data paths are resolved
// against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Every field with its resolved value; feeding this back reproduces the run.
nlohmann::ordered_json to_json(const RunConfig& config);

nlohmann::ordered_json synth_params_json(const SynthParams& params);
SynthParams synth_params_from_json(const nlohmann::json& j);

DDIDataset load_run_dataset(const RunConfig& config);

}  // namespace cadgl::cli
