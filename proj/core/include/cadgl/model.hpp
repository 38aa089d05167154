#pragma once

#include <span>
#include <vector>

#include "cadgl/autodiff.hpp"
#include "cadgl/config.hpp"
#include "cadgl/dataset.hpp"
#include "cadgl/encoder.hpp"
#include "cadgl/vgae.hpp"

namespace cadgl {

struct ModelDims {
  std::size_t n_drugs = 0;
  std::size_t f_dim = 0;
  std::size_t n_types = 0;
  bool operator==(const ModelDims&) const = default;
};

ModelDims dims_of(const DDIDataset& dataset);

struct PairForward {
  PairLatent latent;
  Var logits;  // [P x 1]
};

// Graph encoder, latent encoder and decoder with their parameters. Owns its
// parameter nodes, so it is move-only.
class CadglModel {
 public:
  CadglModel(const TrainConfig& config, const ModelDims& dims);
  CadglModel(CadglModel&&) = default;
  CadglModel& operator=(CadglModel&&) = default;
  CadglModel(const CadglModel&) = delete;
  CadglModel& operator=(const CadglModel&) = delete;

  const TrainConfig& config() const { return config_; }
  const ModelDims& dims() const { return dims_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }
  const EncoderParams& encoder() const { return encoder_; }
  const VgaeParams& vgae() const { return vgae_; }

  EncoderOutput encode(const Var& features, const MessageGraph& graph) const;

  // Train mode samples the reparameterization noise from `rng`; a null rng
  // selects eval mode (e = mu).
  PairForward forward_pairs(const EncoderOutput& encoded, const Var& features,
                            std::span<const PairExample> pairs, Rng* rng) const;

  // Eval-mode probabilities, evaluated in chunks.
  std::vector<double> predict_proba(const Tensor& features, const MessageGraph& graph,
                                    std::span<const PairExample> pairs) const;

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  TrainConfig config_;
  ModelDims dims_;
  ParameterStore params_;
  EncoderParams encoder_;
  VgaeParams vgae_;
};

}  // namespace cadgl
