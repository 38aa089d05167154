#include "cadgl/objectives.hpp"

#include <cmath>
#include <iostream>
#include <set>

#include <fmt/format.h>

#include "cadgl/error.hpp"
#include "cadgl/ops.hpp"

namespace cadgl {

Var ce_loss(const Var& logits, std::span<const double> labels) {
  if (labels.empty()) throw ContractError("ce_loss: empty batch");
  return bce_with_logits(logits, labels);
}

Var kl_loss(const Var& mu, const Var& log_sigma) {
  require_same_shape(mu.shape(), log_sigma.shape(), "kl_loss");
  if (mu.rows() == 0) throw ContractError("kl_loss: empty batch");
  const Var sigma_sq = exp(scale(log_sigma, 2.0));
  const Var terms = add_scalar(sub(add(mul(mu, mu), sigma_sq), scale(log_sigma, 2.0)), -1.0);
  return scale(sum(terms), 0.5 / static_cast<double>(mu.rows()));
}

SsCandidates sample_ss_candidates(const MessageGraph& graph, Rng& rng) {
  SsCandidates c;
  const auto& edges = graph.undirected_edges();
  const std::size_t n = graph.n_nodes();
  c.pairs.assign(edges.begin(), edges.end());
  c.labels.assign(edges.size(), 1.0);

  const std::size_t max_pairs = n * (n - (n > 0 ? 1 : 0)) / 2;
  const std::size_t non_edges = max_pairs - edges.size();
  const std::size_t wanted = std::min(edges.size(), non_edges);
  std::set<std::pair<std::size_t, std::size_t>> drawn;
  while (drawn.size() < wanted) {
    std::size_t i = uniform_index(rng, n);
    std::size_t j = uniform_index(rng, n);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (graph.connected(i, j)) continue;
    if (drawn.emplace(i, j).second) {
      c.pairs.emplace_back(i, j);
      c.labels.push_back(0.0);
    }
  }
  return c;
}

Var ss_loss(const Var& edge_logits, std::span<const double> labels, double p_e, Rng& rng) {
  if (!(p_e > 0.0 && p_e <= 1.0)) {
    throw ContractError(fmt::format("ss_loss: p_e must lie in (0, 1], got {}", p_e));
  }
  if (edge_logits.rows() != labels.size()) {
    throw DimensionError(fmt::format("ss_loss: {} logits for {} labels", edge_logits.rows(),
                                     labels.size()));
  }
  std::vector<std::size_t> kept;
  std::vector<double> kept_labels;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (p_e >= 1.0 || bernoulli(rng, p_e)) {
      kept.push_back(i);
      kept_labels.push_back(labels[i]);
    }
  }
  if (kept.empty()) {
    std::clog << "warning: self-supervision subsample is empty; ss term is 0 this step\n";
    return Var(Tensor::scalar(0.0));
  }
  return bce_with_logits(gather_rows(edge_logits, kept), kept_labels);
}

LossBreakdown total_loss(double ce, double kl, double ss) {
  const std::pair<const char*, double> terms[] = {{"ce", ce}, {"kl", kl}, {"ss", ss}};
  for (auto [name, value] : terms) {
    if (!std::isfinite(value)) throw NumericError(fmt::format("loss term {} is {}", name, value));
  }
  return {ce, kl, ss, ce + kl + ss};
}

}  // namespace cadgl
