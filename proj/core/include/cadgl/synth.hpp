#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cadgl/dataset.hpp"

namespace cadgl {

// Stochastic-block stand-in for a real interaction table.
struct SynthParams {
  std::size_t n_drugs = 200;
  std::size_t n_types = 6;
  std::size_t n_blocks = 4;
  // Must cover the block one-hot plus the 4 degree columns; extra columns are
  // pure noise.
  std::size_t f_dim = 16;
  double p_in = 0.15;
  double p_out = 0.01;
  std::uint64_t seed = 7;
};

// Throws ContractError for parameters outside their domain.
void validate(const SynthParams& params);

// Drugs are split into contiguous near-equal blocks. Each unordered pair is
// linked with probability p_in (same block) or p_out (different blocks), in a
// random direction; the interaction type favours one type per block pair.
// Features: noisy block one-hot (sigma 0.3), four degree-derived columns,
// then noise columns.
DDIDataset synth_generate(const SynthParams& params);

std::size_t synth_block_of(const SynthParams& params, std::size_t drug);

// Writes edges.tsv, features.tsv and meta.json into `dir`.
void write_synthetic(const std::filesystem::path& dir, const DDIDataset& dataset,
                     const SynthParams& params);

std::string synth_meta_json(const SynthParams& params, const DDIDataset& dataset);

}  // namespace cadgl
