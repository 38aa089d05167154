#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cadgl/segments.hpp"
#include "cadgl/tensor.hpp"

namespace cadgl {

// Directed typed interaction: drug `src` affects drug `dst` under `type`.
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::size_t type = 0;
  auto operator<=>(const Edge&) const = default;
};

struct PairExample {
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  std::size_t type = 0;
  int label = 1;
  auto operator<=>(const PairExample&) const = default;
};

// Drug nodes, their feature rows and the typed interaction edges. Immutable
// after construction; the constructor enforces every invariant.
class DDIDataset {
 public:
  DDIDataset() = default;
  DDIDataset(std::vector<std::string> drug_ids, std::vector<std::string> type_labels,
             Tensor features, std::vector<Edge> edges);

  std::size_t n_drugs() const { return drug_ids_.size(); }
  std::size_t n_types() const { return type_labels_.size(); }
  std::size_t f_dim() const { return features_.cols(); }

  const std::vector<std::string>& drug_ids() const { return drug_ids_; }
  const std::vector<std::string>& type_labels() const { return type_labels_; }
  const Tensor& features() const { return features_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::optional<std::size_t> drug_index(const std::string& id) const;
  std::optional<std::size_t> type_index(const std::string& label) const;
  bool is_positive(std::size_t d1, std::size_t d2, std::size_t type) const;

  // Positive pair examples for a subset of edge indices.
  std::vector<PairExample> positives(std::span<const std::size_t> edge_indices) const;

  bool operator==(const DDIDataset& other) const;

 private:
  std::uint64_t key(std::size_t d1, std::size_t d2, std::size_t type) const {
    return (static_cast<std::uint64_t>(d1) * n_drugs() + d2) * n_types() + type;
  }

  std::vector<std::string> drug_ids_;
  std::vector<std::string> type_labels_;
  Tensor features_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> drug_lookup_;
  std::unordered_map<std::string, std::size_t> type_lookup_;
  std::unordered_set<std::uint64_t> positive_keys_;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  bool operator==(const Split&) const = default;
};

using SplitRatios = std::array<double, 3>;

// Deterministic shuffle of edge indices; part sizes are rounded ratios of
// the edge count with the test part taking the remainder.
Split split_edges(const DDIDataset& dataset, const SplitRatios& ratios, std::uint64_t seed);

// One negative per positive: one endpoint (fair coin) replaced by a uniform
// drug, redrawn until the triple is not a known positive. Throws
// SaturationError after 1000 failed draws for a single positive.
std::vector<PairExample> sample_negatives(const DDIDataset& dataset,
                                          std::span<const PairExample> positives,
                                          std::uint64_t seed);

// Undirected, type-collapsed, self-loop-free adjacency over a subset of
// edges. Defines the neighborhoods every encoder layer aggregates over.
class MessageGraph {
 public:
  MessageGraph() = default;
  explicit MessageGraph(std::size_t n_nodes);
  MessageGraph(std::size_t n_nodes, std::span<const std::pair<std::size_t, std::size_t>> pairs);

  std::size_t n_nodes() const { return neighbors_.size(); }
  std::span<const std::size_t> neighbors(std::size_t i) const { return neighbors_[i]; }
  std::size_t degree(std::size_t i) const { return neighbors_[i].size(); }
  const std::vector<std::size_t>& degrees() const { return degrees_; }
  bool connected(std::size_t i, std::size_t j) const;
  // Unique undirected edges as (i, j) with i < j, sorted.
  const std::vector<std::pair<std::size_t, std::size_t>>& undirected_edges() const {
    return edges_;
  }
  const Segments& neighbor_segments() const { return segments_; }

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<std::size_t> degrees_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  Segments segments_;
};

MessageGraph build_message_graph(const DDIDataset& dataset,
                                 std::span<const std::size_t> train_edge_indices);

}  // namespace cadgl
