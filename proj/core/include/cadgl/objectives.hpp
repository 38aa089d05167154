#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cadgl/autodiff.hpp"
#include "cadgl/dataset.hpp"
#include "cadgl/random.hpp"

namespace cadgl {

struct LossBreakdown {
  double ce = 0.0;
  double kl = 0.0;
  double ss = 0.0;
  double total = 0.0;
};

// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels.
// Throws ContractError on an empty batch.
Var ce_loss(const Var& logits, std::span<const double> labels);

// Per-row KL(q || N(0, I)) = 1/2 sum_j (mu^2 + sigma^2 - 2 log sigma - 1) with
// sigma = exp(log_sigma), averaged over rows.
Var kl_loss(const Var& mu, const Var& log_sigma);

// Candidate edges for the self-supervision term: every message-graph edge
// (label 1) plus as many uniformly drawn non-adjacent pairs (label 0).
struct SsCandidates {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> labels;
};
SsCandidates sample_ss_candidates(const MessageGraph& graph, Rng& rng);

// BCE over the candidates after keeping each one independently with
// probability p_e. `edge_logits` holds (W_s h_i)^T W_s h_j per candidate, so
// phi = sigmoid(logit). Returns a zero constant if nothing is kept.
Var ss_loss(const Var& edge_logits, std::span<const double> labels, double p_e, Rng& rng);

// Unweighted sum; throws NumericError naming the first non-finite term.
LossBreakdown total_loss(double ce, double kl, double ss);

}  // namespace cadgl
