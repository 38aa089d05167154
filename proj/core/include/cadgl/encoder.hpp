#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cadgl/autodiff.hpp"
#include "cadgl/dataset.hpp"
#include "cadgl/ops.hpp"
#include "cadgl/random.hpp"

namespace cadgl {

struct EncoderConfig {
  std::size_t d_in = 0;
  std::size_t d_hid = 64;
  std::size_t d_out = 64;
  std::size_t max_degree_bucket = 16;
  double leaky_slope = kDefaultLeakySlope;
  double graphnorm_eps = 1e-5;
  bool use_lcp = true;
  bool use_mcp = true;

  // Width of the concatenated pre-processor output fed to attention.
  std::size_t concat_width() const { return d_hid * ((use_lcp ? 1 : 0) + (use_mcp ? 1 : 0)); }
};

// Local context: one weight matrix [d_in x d_hid] shared by the node and its
// neighbor mean.
struct LcpParams {
  Parameter W;
};

// Molecular context: a (W1, W2) pair per degree bucket 0..max_degree_bucket.
struct McpParams {
  std::vector<Parameter> W1;
  std::vector<Parameter> W2;
  std::size_t max_degree_bucket = 0;
};

struct GraphNormParams {
  Parameter zeta;   // [1 x d], init 1
  Parameter gamma;  // [1 x d], init 1
  Parameter beta;   // [1 x d], init 0
  double eps = 1e-5;
};

struct SsgAttnParams {
  Parameter W_s;  // [concat_width x d_out]
  Parameter a;    // [2*d_out x 1]
  double leaky_slope = kDefaultLeakySlope;
};

struct EncoderParams {
  std::optional<LcpParams> lcp;
  std::optional<GraphNormParams> lcp_norm;
  std::optional<McpParams> mcp;
  std::optional<GraphNormParams> mcp_norm;
  SsgAttnParams attn;
};

// Registers all encoder parameters under "encoder.*" with Glorot-uniform
// weights and identity GraphNorm.
EncoderParams init_encoder(ParameterStore& store, const EncoderConfig& config, Rng& rng);

struct EncoderOutput {
  Var x_o;         // [n x d_out]
  Var projected;   // W_s h, [n x d_out]
  Var attention;   // [E x 1], grouped by destination
  std::vector<std::size_t> attn_dst;
  std::vector<std::size_t> attn_src;
  Segments attn_segments;
  // One entry per message-graph edge, in undirected_edges() order.
  Var edge_logit;  // (W_s h_i)^T W_s h_j
  Var edge_prob;   // sigmoid(edge_logit)
};

// h_i = W x_i + W mean_{j in N(i)} x_j; isolated nodes get W x_i.
Var lcp_forward(const Var& X, const MessageGraph& graph, const LcpParams& params);

// h_i = W1[b] x_i + W2[b] sum_{j in N(i)} x_j with b = min(deg(i), max bucket).
Var mcp_forward(const Var& X, const MessageGraph& graph, const McpParams& params);

// Per-column over the node axis:
// (x - zeta*E[x]) / sqrt(Var[x - zeta*E[x]] + eps) * gamma + beta,
// with population variance.
Var graphnorm(const Var& H, const GraphNormParams& params);

// Max attention over N(i) + {i}. Score
// e_ij = a^T [W_s h_i || W_s h_j] * sigmoid((W_s h_i)^T W_s h_j),
// alpha = per-node softmax of LeakyReLU(e), x_o_i = sum_j alpha_ij W_s h_j.
EncoderOutput ssgattn_forward(const Var& H, const MessageGraph& graph, const SsgAttnParams& params);

EncoderOutput encode(const Var& X, const MessageGraph& graph, const EncoderParams& params);

// Dot-product edge logits (W_s h_u)^T W_s h_v for arbitrary node pairs.
Var pair_edge_logits(const Var& projected,
                     std::span<const std::pair<std::size_t, std::size_t>> pairs);

}  // namespace cadgl
