#include "cadgl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "cadgl/error.hpp"
#include "cadgl/ops.hpp"

namespace cadgl {
namespace {

constexpr std::uint64_t kNegativeSalt = 0xC0FFEE;
constexpr std::uint64_t kNoiseSalt = 0xBADC0DE;
constexpr std::uint64_t kValidSalt = 0x7A11D;
constexpr std::uint64_t kTestSalt = 0x7E57;

std::vector<double> label_column(std::span<const PairExample> pairs) {
  std::vector<double> y(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) y[i] = pairs[i].label;
  return y;
}

std::vector<int> int_labels(std::span<const PairExample> pairs) {
  std::vector<int> y(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) y[i] = pairs[i].label;
  return y;
}

std::vector<double> probabilities(const Var& logits) {
  const Var p = sigmoid(logits);
  return {p.value().data().begin(), p.value().data().end()};
}

double accuracy_at_half(std::span<const double> probs, std::span<const PairExample> pairs) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if ((probs[i] >= 0.5) == (pairs[i].label == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.size());
}

}  // namespace

std::uint64_t validation_negative_seed(const TrainConfig& config) {
  return mix_seed(config.seed, kValidSalt);
}

std::uint64_t test_negative_seed(const TrainConfig& config) {
  return mix_seed(config.seed, kTestSalt);
}

std::vector<PairExample> labelled_pairs(const DDIDataset& dataset,
                                        std::span<const std::size_t> edge_indices,
                                        std::uint64_t seed) {
  std::vector<PairExample> pairs = dataset.positives(edge_indices);
  if (pairs.empty()) return pairs;
  const auto negatives = sample_negatives(dataset, pairs, seed);
  pairs.insert(pairs.end(), negatives.begin(), negatives.end());
  return pairs;
}

LossTerms cadgl_loss(const CadglModel& model, const Var& features, const MessageGraph& graph,
                     std::span<const PairExample> batch, std::span<const double> labels,
                     Rng& rng) {
  LossTerms t;
  t.encoded = model.encode(features, graph);
  const PairForward fwd = model.forward_pairs(t.encoded, features, batch, &rng);
  t.ce = ce_loss(fwd.logits, labels);
  t.kl = kl_loss(fwd.latent.mu, fwd.latent.log_sigma);
  const SsCandidates candidates = sample_ss_candidates(graph, rng);
  t.ss = candidates.pairs.empty()
             ? Var(Tensor::scalar(0.0))
             : ss_loss(pair_edge_logits(t.encoded.projected, candidates.pairs), candidates.labels,
                       model.config().p_e, rng);
  t.total = add(add(t.ce, t.kl), t.ss);
  return t;
}

TrainResult train(const DDIDataset& dataset, const Split& split, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty()) throw ContractError("train: the training split is empty");

  TrainResult result{CadglModel(config, dims_of(dataset)), AdamState{}, {}, 0, false};
  CadglModel& model = result.model;
  AdamState state(model.parameters());
  const AdamOptions adam{config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps};

  const Var X(dataset.features());
  const MessageGraph graph = build_message_graph(dataset, split.train);
  const std::vector<PairExample> train_pos = dataset.positives(split.train);
  const std::vector<PairExample> valid_pairs =
      labelled_pairs(dataset, split.valid, validation_negative_seed(config));
  const std::vector<double> valid_labels = label_column(valid_pairs);
  const std::vector<int> valid_int_labels = int_labels(valid_pairs);

  std::optional<double> best_auroc;
  std::vector<Tensor> best_params;
  AdamState best_state;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<PairExample> batch = train_pos;
    const auto negatives =
        sample_negatives(dataset, train_pos, mix_seed(config.seed ^ kNegativeSalt, epoch));
    batch.insert(batch.end(), negatives.begin(), negatives.end());
    const std::vector<double> labels = label_column(batch);
    Rng rng(mix_seed(config.seed ^ kNoiseSalt, epoch));

    const LossTerms terms = cadgl_loss(model, X, graph, batch, labels, rng);
    const EncoderOutput& encoded = terms.encoded;

    EpochRecord record;
    record.epoch = epoch;
    try {
      record.loss =
          total_loss(terms.ce.value().item(), terms.kl.value().item(), terms.ss.value().item());
    } catch (const NumericError& e) {
      throw NumericError(fmt::format("epoch {}: {}", epoch, e.what()));
    }

    {
      const PairForward eval = model.forward_pairs(encoded, X, batch, nullptr);
      record.train_accuracy = accuracy_at_half(probabilities(eval.logits), batch);
    }
    if (!valid_pairs.empty()) {
      const PairForward eval = model.forward_pairs(encoded, X, valid_pairs, nullptr);
      record.val_loss = ce_loss(eval.logits, valid_labels).value().item();
      record.val = compute_metrics(probabilities(eval.logits), valid_int_labels);
      if (record.val.auroc && (!best_auroc || *record.val.auroc > *best_auroc)) {
        best_auroc = record.val.auroc;
        best_params = model.snapshot();
        best_state = state;
        result.best_epoch = epoch;
      }
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    model.parameters().zero_grads();
    backward(terms.total);
    adam_step(model.parameters(), state, adam);
  }

  if (best_auroc) {
    model.restore(best_params);
    result.optimizer = std::move(best_state);
  } else {
    result.optimizer = std::move(state);
    result.best_epoch = config.epochs;
    result.final_parameters = true;
  }
  return result;
}

Metrics evaluate(const CadglModel& model, const DDIDataset& dataset, const MessageGraph& graph,
                 std::span<const PairExample> pairs) {
  if (pairs.empty()) throw ContractError("evaluate: no pairs");
  const auto probs = model.predict_proba(dataset.features(), graph, pairs);
  const auto labels = int_labels(pairs);
  return compute_metrics(probs, labels);
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

RepeatedResult run_repeated(const DDIDataset& dataset, const Split& split,
                            const TrainConfig& config, std::size_t k, bool vary_seed) {
  if (k < 2) throw ContractError("run_repeated needs k >= 2");
  const MessageGraph graph = build_message_graph(dataset, split.train);
  RepeatedResult out;
  std::vector<double> acc, roc, prc, f1;
  for (std::size_t r = 0; r < k; ++r) {
    TrainConfig run_config = config;
    if (vary_seed) run_config.seed = config.seed + r;
    TrainResult trained = train(dataset, split, run_config);
    const auto test_pairs = labelled_pairs(dataset, split.test, test_negative_seed(run_config));
    const Metrics m = evaluate(trained.model, dataset, graph, test_pairs);
    out.runs.push_back(m);
    out.histories.push_back(std::move(trained.history));
    acc.push_back(m.accuracy);
    roc.push_back(m.auroc.value_or(std::nan("")));
    prc.push_back(m.auprc.value_or(std::nan("")));
    f1.push_back(m.f1);
  }
  out.accuracy = summarize(acc);
  out.auroc = summarize(roc);
  out.auprc = summarize(prc);
  out.f1 = summarize(f1);
  return out;
}

std::string format_mean_std(const MetricSummary& s, int decimals) {
  return fmt::format("{:.{}f} ± {:.{}f}", 100.0 * s.mean, decimals, 100.0 * s.std, decimals);
}

std::string format_table_row(const std::string& label, const RepeatedResult& r) {
  return fmt::format("{}\t{}\t{}\t{}\t{}", label, format_mean_std(r.accuracy),
                     format_mean_std(r.auroc), format_mean_std(r.auprc), format_mean_std(r.f1));
}

RankResult rank_novel(const CadglModel& model, const DDIDataset& dataset,
                      const MessageGraph& graph, std::span<const PairExample> candidates,
                      std::size_t top_k) {
  RankResult result;
  std::vector<PairExample> novel;
  novel.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (c.d1 >= dataset.n_drugs() || c.d2 >= dataset.n_drugs() || c.type >= dataset.n_types()) {
      throw IndexError(fmt::format("candidate ({}, {}, {}) out of range", c.d1, c.d2, c.type));
    }
    if (dataset.is_positive(c.d1, c.d2, c.type)) {
      result.excluded.push_back(c);
    } else {
      novel.push_back(c);
    }
  }
  if (novel.empty()) return result;

  const auto probs = model.predict_proba(dataset.features(), graph, novel);
  result.ranked.reserve(novel.size());
  for (std::size_t i = 0; i < novel.size(); ++i) {
    result.ranked.push_back({novel[i].d1, novel[i].d2, novel[i].type, probs[i]});
  }
  const auto before = [](const RankedPair& a, const RankedPair& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return std::tie(a.d1, a.d2, a.type) < std::tie(b.d1, b.d2, b.type);
  };
  const std::size_t keep = std::min(top_k, result.ranked.size());
  std::partial_sort(result.ranked.begin(), result.ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                    result.ranked.end(), before);
  result.ranked.resize(keep);
  return result;
}

std::vector<PairExample> unseen_candidates(const DDIDataset& dataset, std::size_t cap,
                                           std::uint64_t seed) {
  const std::size_t n = dataset.n_drugs();
  const std::size_t t = dataset.n_types();
  std::size_t known = 0;
  for (const Edge& e : dataset.edges()) {
    if (e.src != e.dst) ++known;
  }
  const std::size_t total = n * (n > 0 ? n - 1 : 0) * t - known;
  std::vector<PairExample> out;
  if (total <= cap) {
    out.reserve(total);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        for (std::size_t k = 0; k < t; ++k) {
          if (!dataset.is_positive(a, b, k)) out.push_back({a, b, k, 0});
        }
      }
    }
    return out;
  }
  Rng rng(seed);
  std::unordered_set<std::uint64_t> drawn;
  out.reserve(cap);
  while (out.size() < cap) {
    const std::size_t a = uniform_index(rng, n);
    const std::size_t b = uniform_index(rng, n);
    const std::size_t k = uniform_index(rng, t);
    if (a == b || dataset.is_positive(a, b, k)) continue;
    if (drawn.insert((static_cast<std::uint64_t>(a) * n + b) * t + k).second) {
      out.push_back({a, b, k, 0});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_ranking_tsv(const DDIDataset& dataset, std::span<const RankedPair> ranked) {
  std::string out;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& r = ranked[i];
    out += fmt::format("{}\t{}\t{}\t{}\t{:.3f}%\n", i + 1, dataset.drug_ids()[r.d1],
                       dataset.drug_ids()[r.d2], dataset.type_labels()[r.type],
                       100.0 * r.probability);
  }
  return out;
}

}  // namespace cadgl
