#include "cadgl/synth.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cadgl/dataset_io.hpp"
#include "cadgl/error.hpp"
#include "cadgl/random.hpp"

namespace cadgl {

namespace {
constexpr std::size_t kDegreeColumns = 4;
constexpr double kOneHotNoise = 0.3;
constexpr double kDegreeNoise = 0.1;
constexpr double kPreferredTypeMass = 0.6;
}  // namespace

void validate(const SynthParams& p) {
  if (p.n_blocks < 2) throw ContractError("synth: need at least 2 blocks");
  if (p.n_drugs < p.n_blocks) throw ContractError("synth: fewer drugs than blocks");
  if (p.n_types < 1) throw ContractError("synth: need at least 1 interaction type");
  if (p.f_dim < p.n_blocks + kDegreeColumns) {
    throw ContractError(fmt::format("synth: f_dim {} < blocks + {} degree columns", p.f_dim,
                                    kDegreeColumns));
  }
  if (!(p.p_out >= 0.0 && p.p_out < p.p_in && p.p_in <= 1.0)) {
    throw ContractError(
        fmt::format("synth: need 0 <= p_out < p_in <= 1, got p_in={} p_out={}", p.p_in, p.p_out));
  }
}

std::size_t synth_block_of(const SynthParams& params, std::size_t drug) {
  return drug * params.n_blocks / params.n_drugs;
}

DDIDataset synth_generate(const SynthParams& p) {
  validate(p);
  Rng rng(p.seed);

  std::vector<std::string> drug_ids(p.n_drugs);
  for (std::size_t i = 0; i < p.n_drugs; ++i) drug_ids[i] = fmt::format("D{:05}", i);
  std::vector<std::string> type_labels(p.n_types);
  for (std::size_t t = 0; t < p.n_types; ++t) type_labels[t] = fmt::format("T{:02}", t);

  std::vector<Edge> edges;
  std::vector<double> degree(p.n_drugs, 0.0);
  for (std::size_t i = 0; i < p.n_drugs; ++i) {
    for (std::size_t j = i + 1; j < p.n_drugs; ++j) {
      const std::size_t bi = synth_block_of(p, i);
      const std::size_t bj = synth_block_of(p, j);
      if (!bernoulli(rng, bi == bj ? p.p_in : p.p_out)) continue;
      const bool forward = bernoulli(rng, 0.5);
      const std::size_t preferred = (bi * p.n_blocks + bj) % p.n_types;
      const std::size_t type =
          bernoulli(rng, kPreferredTypeMass) ? preferred : uniform_index(rng, p.n_types);
      edges.push_back(forward ? Edge{i, j, type} : Edge{j, i, type});
      degree[i] += 1.0;
      degree[j] += 1.0;
    }
  }

  double mean_degree = 0.0;
  for (double d : degree) mean_degree += d;
  mean_degree = std::max(mean_degree / static_cast<double>(p.n_drugs), 1.0);

  Tensor features(p.n_drugs, p.f_dim);
  for (std::size_t i = 0; i < p.n_drugs; ++i) {
    auto row = features.row(i);
    const std::size_t block = synth_block_of(p, i);
    for (std::size_t b = 0; b < p.n_blocks; ++b) {
      row[b] = (b == block ? 1.0 : 0.0) + kOneHotNoise * standard_normal(rng);
    }
    const double rel = degree[i] / mean_degree;
    const double derived[kDegreeColumns] = {rel, std::log1p(degree[i]) / std::log1p(mean_degree),
                                            std::sqrt(rel), std::tanh(rel - 1.0)};
    for (std::size_t c = 0; c < kDegreeColumns; ++c) {
      row[p.n_blocks + c] = derived[c] + kDegreeNoise * standard_normal(rng);
    }
    for (std::size_t c = p.n_blocks + kDegreeColumns; c < p.f_dim; ++c) {
      row[c] = kOneHotNoise * standard_normal(rng);
    }
  }
  return DDIDataset(std::move(drug_ids), std::move(type_labels), std::move(features),
                    std::move(edges));
}

std::string synth_meta_json(const SynthParams& p, const DDIDataset& dataset) {
  nlohmann::ordered_json meta;
  meta["generator"] = "stochastic_block";
  meta["n_drugs"] = p.n_drugs;
  meta["n_types"] = p.n_types;
  meta["n_blocks"] = p.n_blocks;
  meta["f_dim"] = p.f_dim;
  meta["p_in"] = p.p_in;
  meta["p_out"] = p.p_out;
  meta["seed"] = p.seed;
  meta["n_edges"] = dataset.edges().size();
  return meta.dump(2) + "\n";
}

void write_synthetic(const std::filesystem::path& dir, const DDIDataset& dataset,
                     const SynthParams& params) {
  std::filesystem::create_directories(dir);
  write_edges(dir / "edges.tsv", dataset);
  write_features(dir / "features.tsv", dataset);
  std::ofstream meta(dir / "meta.json");
  meta << synth_meta_json(params, dataset);
  if (!meta) throw Error("failed to write " + (dir / "meta.json").string());
}

}  // namespace cadgl
