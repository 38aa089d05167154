#include "cadgl/vgae.hpp"

#include <fmt/format.h>

#include "cadgl/error.hpp"
#include "cadgl/init.hpp"
#include "cadgl/ops.hpp"

namespace cadgl {

VgaeParams init_vgae(ParameterStore& store, const VgaeConfig& config, Rng& rng) {
  if (config.latent_dim == 0 || config.n_types == 0) {
    throw ContractError("vgae: latent_dim and n_types must be positive");
  }
  VgaeParams p;
  const std::size_t in = config.pair_width();
  p.latent.W_mu = store.add("latent.W_mu", glorot_uniform(in, config.latent_dim, rng));
  p.latent.W_sigma = store.add("latent.W_sigma", glorot_uniform(in, config.latent_dim, rng));
  p.types.table =
      store.add("decoder.type_embedding", glorot_uniform(config.n_types, config.type_dim, rng));

  std::size_t width = config.latent_dim + config.type_dim;
  for (std::size_t l = 0; l < config.hidden.size(); ++l) {
    DenseLayer layer;
    layer.weight = store.add(fmt::format("decoder.mlp.{}.weight", l),
                             glorot_uniform(width, config.hidden[l], rng));
    layer.bias = store.add(fmt::format("decoder.mlp.{}.bias", l), Tensor(1, config.hidden[l]));
    p.decoder.mlp.push_back(std::move(layer));
    width = config.hidden[l];
  }
  p.decoder.final_fcl.weight = store.add("decoder.fcl.weight", glorot_uniform(width, 1, rng));
  p.decoder.final_fcl.bias = store.add("decoder.fcl.bias", Tensor(1, 1));
  return p;
}

PairInputs pair_input(const Var& x_o, const Var& features, std::span<const std::size_t> d1,
                      std::span<const std::size_t> d2) {
  if (d1.size() != d2.size()) throw DimensionError("pair_input: d1 and d2 lengths differ");
  if (x_o.rows() != features.rows()) {
    throw DimensionError(fmt::format("pair_input: embeddings {} vs features {}",
                                     x_o.shape().str(), features.shape().str()));
  }
  PairInputs in;
  in.structural = concat_cols(gather_rows(x_o, d1), gather_rows(x_o, d2));
  in.property = concat_cols(gather_rows(features, d1), gather_rows(features, d2));
  return in;
}

PairLatent latent_encode(const Var& structural, const Var& property, const LatentParams& params) {
  const Var joined = concat_cols(row_l2_normalize(structural), row_l2_normalize(property));
  PairLatent out;
  out.mu = matmul(joined, params.W_mu);
  out.log_sigma = matmul(joined, params.W_sigma);
  return out;
}

Var reparameterize(const Var& mu, const Var& log_sigma, const Tensor& noise) {
  require_same_shape(mu.shape(), log_sigma.shape(), "reparameterize");
  require_same_shape(mu.shape(), noise.shape(), "reparameterize noise");
  const Var std_dev = exp(scale(clamp(log_sigma, kLogSigmaMin, kLogSigmaMax), 0.5));
  return add(mu, mul(Var(noise), std_dev));
}

Var reparameterize(const Var& mu, const Var& log_sigma, Rng& rng) {
  Tensor noise(mu.shape());
  for (auto& v : noise.data()) v = standard_normal(rng);
  return reparameterize(mu, log_sigma, noise);
}

Var dense(const Var& x, const DenseLayer& layer) {
  return add(matmul(x, layer.weight), broadcast_rows(layer.bias, x.rows()));
}

Var decode(const Var& e, std::span<const std::size_t> types, const DecoderParams& decoder,
           const TypeEmbedding& embedding) {
  if (types.size() != e.rows()) {
    throw DimensionError(
        fmt::format("decode: {} type indices for {} latent rows", types.size(), e.rows()));
  }
  Var h = concat_cols(e, gather_rows(embedding.table, types));
  for (const auto& layer : decoder.mlp) h = relu(dense(h, layer));
  return h;
}

Var predict_logit(const Var& Z, const DecoderParams& decoder) {
  return dense(Z, decoder.final_fcl);
}

}  // namespace cadgl
