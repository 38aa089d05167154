#pragma once

#include <string>
#include <vector>

#include "cadgl/trainer.hpp"

namespace cadgl::cli {

struct AblationRow {
  std::string label;  // "lcp_only", "mcp_only", "both"
  bool use_lcp = true;
  bool use_mcp = true;
  RepeatedResult result;
  double seconds = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // lcp_only, mcp_only, both
  // mean accuracy: both >= mcp_only >= lcp_only
  bool ordering_holds = false;
  // both >= each single-processor mean minus that row's std
  bool within_one_std = false;
  std::vector<std::string> warnings;
};

// Trains every processor configuration `seeds` times (seeds base.seed + r).
AblationReport run_ablation(const DDIDataset& dataset, const Split& split, const TrainConfig& base,
                            std::size_t seeds);

// Header plus one "m ± s" row per configuration.
std::string format_ablation_table(const AblationReport& report);

// epoch,val_loss,val_auroc,val_auprc averaged over the runs; one row per epoch.
std::string curve_csv(const RepeatedResult& result);

}  // namespace cadgl::cli
