#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cadgl/dataset.hpp"

namespace cadgl {

// Parsed contents of an edges file. Drug ids and type labels are indexed in
// first-seen order.
struct EdgeTable {
  std::vector<std::string> drug_ids;
  std::vector<std::string> type_labels;
  std::vector<Edge> edges;
};

// Format: `drug1<TAB>drug2<TAB>type_id` per line, `#` starts a comment line.
EdgeTable load_edges(const std::filesystem::path& path);

struct FeatureLoadOptions {
  // Drugs absent from the file get an all-zero row instead of an error.
  bool allow_missing = false;
  // Rows for drugs not in `drug_ids` are appended (in file order) instead of
  // raising a ReferenceError. `drug_ids` is extended accordingly.
  bool append_unknown = false;
};

// Format: header `drug_id<TAB>f0<TAB>f1...`, then one row per drug. Returns
// the matrix aligned to `drug_ids`.
Tensor load_features(const std::filesystem::path& path, std::vector<std::string>& drug_ids,
                     const FeatureLoadOptions& options = {});

// Edges plus features; drugs that appear only in the features file become
// isolated nodes.
DDIDataset load_dataset(const std::filesystem::path& edges_path,
                        const std::filesystem::path& features_path, bool allow_missing = false);

void write_edges(const std::filesystem::path& path, const DDIDataset& dataset);
void write_features(const std::filesystem::path& path, const DDIDataset& dataset);

}  // namespace cadgl
