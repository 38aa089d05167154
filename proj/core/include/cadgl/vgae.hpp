#pragma once

#include <span>
#include <vector>

#include "cadgl/autodiff.hpp"
#include "cadgl/ops.hpp"
#include "cadgl/random.hpp"

namespace cadgl {

inline constexpr double kLogSigmaMin = -10.0;
inline constexpr double kLogSigmaMax = 10.0;

struct VgaeConfig {
  std::size_t struct_dim = 64;  // encoder d_out
  std::size_t feature_dim = 0;  // per-drug property width
  std::size_t latent_dim = 64;
  std::size_t n_types = 1;
  std::size_t type_dim = 32;
  std::vector<std::size_t> hidden = {128, 64};

  std::size_t pair_width() const { return 2 * struct_dim + 2 * feature_dim; }
};

struct LatentParams {
  Parameter W_mu;     // [pair_width x latent_dim]
  Parameter W_sigma;  // [pair_width x latent_dim]
};

struct TypeEmbedding {
  Parameter table;  // [n_types x type_dim]
};

struct DenseLayer {
  Parameter weight;  // [in x out]
  Parameter bias;    // [1 x out]
};

struct DecoderParams {
  std::vector<DenseLayer> mlp;  // ReLU after each
  DenseLayer final_fcl;         // -> scalar logit
};

struct VgaeParams {
  LatentParams latent;
  TypeEmbedding types;
  DecoderParams decoder;
};

VgaeParams init_vgae(ParameterStore& store, const VgaeConfig& config, Rng& rng);

// Per-pair inputs: rows are x_o[d1] || x_o[d2] and X_f[d1] || X_f[d2].
struct PairInputs {
  Var structural;
  Var property;
};

// Throws IndexError if any drug index is out of range.
PairInputs pair_input(const Var& x_o, const Var& features, std::span<const std::size_t> d1,
                      std::span<const std::size_t> d2);

struct PairLatent {
  Var mu;
  Var log_sigma;
  Var e;
};

// mu = [psi(s) || psi(p)] W_mu, log_sigma = [psi(s) || psi(p)] W_sigma, with
// psi the row-wise L2 normalization.
PairLatent latent_encode(const Var& structural, const Var& property, const LatentParams& params);

// e = mu + noise * exp(0.5 * clamp(log_sigma, -10, 10)). `noise` must match
// mu's shape.
Var reparameterize(const Var& mu, const Var& log_sigma, const Tensor& noise);
// Draws standard-normal noise from `rng`.
Var reparameterize(const Var& mu, const Var& log_sigma, Rng& rng);
// Eval mode: returns mu itself.
inline Var reparameterize_eval(const Var& mu) { return mu; }

// Z = MLP(e || emb[type]); ReLU between layers.
Var decode(const Var& e, std::span<const std::size_t> types, const DecoderParams& decoder,
           const TypeEmbedding& embedding);

// z = FCL(Z) as a [P x 1] logit column.
Var predict_logit(const Var& Z, const DecoderParams& decoder);
inline Var predict(const Var& Z, const DecoderParams& decoder) {
  return sigmoid(predict_logit(Z, decoder));
}

Var dense(const Var& x, const DenseLayer& layer);

}  // namespace cadgl
