#include "cadgl/model.hpp"

#include <algorithm>

#include "cadgl/error.hpp"
#include "cadgl/ops.hpp"

namespace cadgl {

namespace {
constexpr std::size_t kPredictChunk = 8192;
}

ModelDims dims_of(const DDIDataset& dataset) {
  return {dataset.n_drugs(), dataset.f_dim(), dataset.n_types()};
}

CadglModel::CadglModel(const TrainConfig& config, const ModelDims& dims)
    : config_(config), dims_(dims) {
  config_.validate();
  Rng rng(mix_seed(config_.seed, 0x1417));
  EncoderConfig enc;
  enc.d_in = dims.f_dim;
  enc.d_hid = config_.d_hid;
  enc.d_out = config_.d_out;
  enc.max_degree_bucket = config_.max_degree_bucket;
  enc.leaky_slope = config_.leaky_slope;
  enc.graphnorm_eps = kGraphNormEps;
  enc.use_lcp = config_.use_lcp;
  enc.use_mcp = config_.use_mcp;
  encoder_ = init_encoder(params_, enc, rng);

  VgaeConfig vg;
  vg.struct_dim = config_.d_out;
  vg.feature_dim = dims.f_dim;
  vg.latent_dim = config_.latent_dim;
  vg.n_types = dims.n_types;
  vg.type_dim = config_.t_dim;
  vgae_ = init_vgae(params_, vg, rng);
}

EncoderOutput CadglModel::encode(const Var& features, const MessageGraph& graph) const {
  return cadgl::encode(features, graph, encoder_);
}

PairForward CadglModel::forward_pairs(const EncoderOutput& encoded, const Var& features,
                                      std::span<const PairExample> pairs, Rng* rng) const {
  std::vector<std::size_t> d1, d2, types;
  d1.reserve(pairs.size());
  d2.reserve(pairs.size());
  types.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.type >= dims_.n_types) {
      throw IndexError("interaction type index out of range: " + std::to_string(p.type));
    }
    d1.push_back(p.d1);
    d2.push_back(p.d2);
    types.push_back(p.type);
  }
  const PairInputs inputs = pair_input(encoded.x_o, features, d1, d2);
  PairForward out;
  out.latent = latent_encode(inputs.structural, inputs.property, vgae_.latent);
  out.latent.e = rng != nullptr ? reparameterize(out.latent.mu, out.latent.log_sigma, *rng)
                                : reparameterize_eval(out.latent.mu);
  const Var Z = decode(out.latent.e, types, vgae_.decoder, vgae_.types);
  out.logits = predict_logit(Z, vgae_.decoder);
  return out;
}

std::vector<double> CadglModel::predict_proba(const Tensor& features, const MessageGraph& graph,
                                              std::span<const PairExample> pairs) const {
  const Var X(features);
  const EncoderOutput encoded = encode(X, graph);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t start = 0; start < pairs.size(); start += kPredictChunk) {
    const auto chunk = pairs.subspan(start, std::min(kPredictChunk, pairs.size() - start));
    const Var p = sigmoid(forward_pairs(encoded, X, chunk, nullptr).logits);
    out.insert(out.end(), p.value().data().begin(), p.value().data().end());
  }
  return out;
}

std::vector<Tensor> CadglModel::snapshot() const {
  std::vector<Tensor> values;
  values.reserve(params_.size());
  for (const auto& p : params_) values.push_back(p.value());
  return values;
}

void CadglModel::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) {
    throw DimensionError("restore: snapshot size does not match parameter count");
  }
  std::size_t i = 0;
  for (auto& p : params_) {
    require_same_shape(p.shape(), values[i].shape(), p.name().c_str());
    p.mutable_value() = values[i++];
  }
}

}  // namespace cadgl
