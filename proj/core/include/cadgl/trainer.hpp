#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cadgl/config.hpp"
#include "cadgl/dataset.hpp"
#include "cadgl/metrics.hpp"
#include "cadgl/model.hpp"
#include "cadgl/objectives.hpp"
#include "cadgl/optim.hpp"

namespace cadgl {

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  Metrics val;
};

struct TrainResult {
  CadglModel model;
  AdamState optimizer;
  std::vector<EpochRecord> history;
  // Epoch whose parameters the returned model holds (best validation AUROC,
  // or the last epoch when no validation set exists).
  std::size_t best_epoch = 0;
  // True when the final update was kept rather than a validation snapshot.
  bool final_parameters = false;
};

// Called after each epoch; used for streaming the metrics log.
using EpochCallback = std::function<void(const EpochRecord&)>;

struct LossTerms {
  EncoderOutput encoded;
  Var ce;
  Var kl;
  Var ss;
  Var total;
};

// The training objective ce + kl + ss for one batch. `rng` supplies the
// reparameterization noise and the self-supervision sample, in that order.
LossTerms cadgl_loss(const CadglModel& model, const Var& features, const MessageGraph& graph,
                     std::span<const PairExample> batch, std::span<const double> labels, Rng& rng);

// Full-batch training. Per epoch: encode the training message graph, draw
// fresh negatives, compute ce + kl + ss, record training and validation
// metrics, then take one Adam step. Validation metrics are measured with the
// parameters before that step, and the returned model is the snapshot with the
// highest validation AUROC. Throws NumericError naming the term and epoch if
// the loss becomes non-finite.
TrainResult train(const DDIDataset& dataset, const Split& split, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Positives of the chosen edges plus one seeded negative each.
std::vector<PairExample> labelled_pairs(const DDIDataset& dataset,
                                        std::span<const std::size_t> edge_indices,
                                        std::uint64_t seed);

// Seeds used for the fixed validation / test negatives of a run.
std::uint64_t validation_negative_seed(const TrainConfig& config);
std::uint64_t test_negative_seed(const TrainConfig& config);

// Eval-mode metrics over labelled pairs with the message graph built from
// `split.train`.
Metrics evaluate(const CadglModel& model, const DDIDataset& dataset, const MessageGraph& graph,
                 std::span<const PairExample> pairs);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

struct RepeatedResult {
  std::vector<Metrics> runs;  // test metrics per run
  std::vector<std::vector<EpochRecord>> histories;
  MetricSummary accuracy;
  MetricSummary auroc;
  MetricSummary auprc;
  MetricSummary f1;
};

MetricSummary summarize(std::span<const double> values);

// k trainings with seeds config.seed + 0..k-1 (or config.seed every time if
// vary_seed is false), each scored on the test split.
RepeatedResult run_repeated(const DDIDataset& dataset, const Split& split,
                            const TrainConfig& config, std::size_t k, bool vary_seed = true);

// "98.21 ± 0.17": mean and std of a [0,1] metric in percent.
std::string format_mean_std(const MetricSummary& s, int decimals = 2);
std::string format_table_row(const std::string& label, const RepeatedResult& r);

struct RankedPair {
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  std::size_t type = 0;
  double probability = 0.0;
};

struct RankResult {
  std::vector<RankedPair> ranked;
  std::vector<PairExample> excluded;  // known positives removed from the candidates
};

// Scores novel candidates and returns the top_k by probability, ties broken
// by (d1, d2, type). Candidates that are known positives are dropped and
// reported in `excluded`.
RankResult rank_novel(const CadglModel& model, const DDIDataset& dataset,
                      const MessageGraph& graph, std::span<const PairExample> candidates,
                      std::size_t top_k);

// Every (d1, d2, t) with d1 != d2 that is not a known positive; if there are
// more than `cap`, a seeded uniform sample of `cap` of them.
std::vector<PairExample> unseen_candidates(const DDIDataset& dataset, std::size_t cap,
                                           std::uint64_t seed);

// `rank<TAB>drug1<TAB>drug2<TAB>type_label<TAB>probability_percent` lines.
std::string format_ranking_tsv(const DDIDataset& dataset, std::span<const RankedPair> ranked);

}  // namespace cadgl
