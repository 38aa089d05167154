#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cadgl/config.hpp"
#include "cadgl/model.hpp"
#include "cadgl/optim.hpp"
#include "cadgl/trainer.hpp"

namespace cadgl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary file: magic "CADGLCKP", u32 format_version, u64 epoch, u64 adam
// step, u64 record count, then per record u32 name length, name bytes, u64
// rows, u64 cols and little-endian f64 payload; a trailing u64 FNV-1a hash of
// everything before it. Parameters come first in model order, then the Adam
// moments as "adam.m:<name>" / "adam.v:<name>". Config, dims, history and
// free-form metadata live in the JSON sidecar "<path>.json".
struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  TrainConfig config;
  ModelDims dims;
  std::size_t epoch = 0;
  std::vector<EpochRecord> history;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor>> parameters;
  AdamState optimizer;
};

Checkpoint make_checkpoint(const CadglModel& model, const AdamState& optimizer, std::size_t epoch,
                           std::vector<EpochRecord> history, nlohmann::json metadata = {});

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

// Throws CheckpointError on bad magic, version mismatch, truncation, hash
// mismatch or malformed sidecar. Nothing is returned on failure.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies tensors into an existing model. Missing, unknown or mis-shaped
// parameters raise CheckpointError naming the parameter; the model is left
// untouched in that case.
void restore_parameters(CadglModel& model, const Checkpoint& checkpoint);

CadglModel model_from_checkpoint(const Checkpoint& checkpoint);

// One metrics-log line (JSON object) per epoch.
nlohmann::ordered_json to_json(const EpochRecord& record);
EpochRecord epoch_record_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Metrics& metrics);

}  // namespace cadgl
