#include "cadgl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "cadgl/error.hpp"
#include "cadgl/random.hpp"

namespace cadgl {

DDIDataset::DDIDataset(std::vector<std::string> drug_ids, std::vector<std::string> type_labels,
                       Tensor features, std::vector<Edge> edges)
    : drug_ids_(std::move(drug_ids)),
      type_labels_(std::move(type_labels)),
      features_(std::move(features)),
      edges_(std::move(edges)) {
  if (features_.rows() != drug_ids_.size()) {
    throw DimensionError(fmt::format("features have {} rows for {} drugs", features_.rows(),
                                     drug_ids_.size()));
  }
  if (!features_.all_finite()) throw DomainError("features contain non-finite values");
  for (std::size_t i = 0; i < drug_ids_.size(); ++i) {
    if (!drug_lookup_.emplace(drug_ids_[i], i).second) {
      throw ContractError("duplicate drug id: " + drug_ids_[i]);
    }
  }
  for (std::size_t i = 0; i < type_labels_.size(); ++i) {
    if (!type_lookup_.emplace(type_labels_[i], i).second) {
      throw ContractError("duplicate interaction type label: " + type_labels_[i]);
    }
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    if (edge.src >= n_drugs() || edge.dst >= n_drugs() || edge.type >= n_types()) {
      throw IndexError(fmt::format("edge {} = ({}, {}, {}) out of range ({} drugs, {} types)", e,
                                   edge.src, edge.dst, edge.type, n_drugs(), n_types()));
    }
    if (!positive_keys_.insert(key(edge.src, edge.dst, edge.type)).second) {
      throw ContractError(fmt::format("duplicate edge ({}, {}, {})", drug_ids_[edge.src],
                                      drug_ids_[edge.dst], type_labels_[edge.type]));
    }
  }
}

std::optional<std::size_t> DDIDataset::drug_index(const std::string& id) const {
  auto it = drug_lookup_.find(id);
  if (it == drug_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> DDIDataset::type_index(const std::string& label) const {
  auto it = type_lookup_.find(label);
  if (it == type_lookup_.end()) return std::nullopt;
  return it->second;
}

bool DDIDataset::is_positive(std::size_t d1, std::size_t d2, std::size_t type) const {
  if (d1 >= n_drugs() || d2 >= n_drugs() || type >= n_types()) return false;
  return positive_keys_.contains(key(d1, d2, type));
}

std::vector<PairExample> DDIDataset::positives(std::span<const std::size_t> edge_indices) const {
  std::vector<PairExample> out;
  out.reserve(edge_indices.size());
  for (std::size_t idx : edge_indices) {
    if (idx >= edges_.size()) throw IndexError(fmt::format("edge index {} out of range", idx));
    const Edge& e = edges_[idx];
    out.push_back({e.src, e.dst, e.type, 1});
  }
  return out;
}

bool DDIDataset::operator==(const DDIDataset& other) const {
  return drug_ids_ == other.drug_ids_ && type_labels_ == other.type_labels_ &&
         features_ == other.features_ && edges_ == other.edges_;
}

Split split_edges(const DDIDataset& dataset, const SplitRatios& ratios, std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw ContractError(fmt::format("split ratio {} is not positive", r));
  }
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) {
    throw ContractError(fmt::format("split ratios sum to {:.12f}, expected 1", total));
  }
  const std::size_t n = dataset.edges().size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  auto n_valid = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
  n_valid = std::min(n_valid, n - std::min(n, n_train));

  Split split;
  split.seed = seed;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                     order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
  return split;
}

std::vector<PairExample> sample_negatives(const DDIDataset& dataset,
                                          std::span<const PairExample> positives,
                                          std::uint64_t seed) {
  if (positives.empty()) throw ContractError("sample_negatives: no positives given");
  constexpr int kMaxAttempts = 1000;
  Rng rng(seed);
  std::vector<PairExample> out;
  out.reserve(positives.size());
  for (const PairExample& pos : positives) {
    PairExample neg = pos;
    neg.label = 0;
    int attempt = 0;
    for (; attempt < kMaxAttempts; ++attempt) {
      neg.d1 = pos.d1;
      neg.d2 = pos.d2;
      const bool replace_second = bernoulli(rng, 0.5);
      const std::size_t drug = uniform_index(rng, dataset.n_drugs());
      (replace_second ? neg.d2 : neg.d1) = drug;
      if (!dataset.is_positive(neg.d1, neg.d2, neg.type)) break;
    }
    if (attempt == kMaxAttempts) {
      throw SaturationError(fmt::format(
          "no negative found for ({}, {}, {}) after {} draws", dataset.drug_ids()[pos.d1],
          dataset.drug_ids()[pos.d2], dataset.type_labels()[pos.type], kMaxAttempts));
    }
    out.push_back(neg);
  }
  return out;
}

MessageGraph::MessageGraph(std::size_t n_nodes) : MessageGraph(n_nodes, {}) {}

MessageGraph::MessageGraph(std::size_t n_nodes,
                           std::span<const std::pair<std::size_t, std::size_t>> pairs)
    : neighbors_(n_nodes), degrees_(n_nodes, 0) {
  std::set<std::pair<std::size_t, std::size_t>> unique;
  for (auto [a, b] : pairs) {
    if (a >= n_nodes || b >= n_nodes) {
      throw IndexError(fmt::format("message graph edge ({}, {}) out of range for {} nodes", a, b,
                                   n_nodes));
    }
    if (a == b) continue;
    unique.emplace(std::min(a, b), std::max(a, b));
  }
  edges_.assign(unique.begin(), unique.end());
  for (auto [a, b] : edges_) {
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (std::size_t i = 0; i < n_nodes; ++i) {
    std::sort(neighbors_[i].begin(), neighbors_[i].end());
    degrees_[i] = neighbors_[i].size();
  }
  segments_ = Segments::from_lists(neighbors_);
}

bool MessageGraph::connected(std::size_t i, std::size_t j) const {
  if (i >= n_nodes() || j >= n_nodes()) return false;
  const auto& n = neighbors_[i];
  return std::binary_search(n.begin(), n.end(), j);
}

MessageGraph build_message_graph(const DDIDataset& dataset,
                                 std::span<const std::size_t> train_edge_indices) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(train_edge_indices.size());
  for (std::size_t idx : train_edge_indices) {
    if (idx >= dataset.edges().size()) {
      throw IndexError(fmt::format("train edge index {} out of range", idx));
    }
    const Edge& e = dataset.edges()[idx];
    pairs.emplace_back(e.src, e.dst);
  }
  return MessageGraph(dataset.n_drugs(), pairs);
}

}  // namespace cadgl
