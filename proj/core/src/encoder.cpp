#include "cadgl/encoder.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "cadgl/error.hpp"
#include "cadgl/init.hpp"

namespace cadgl {
namespace {

GraphNormParams init_graphnorm(ParameterStore& store, const std::string& prefix, std::size_t d,
                               double eps) {
  GraphNormParams p;
  p.zeta = store.add(prefix + ".zeta", Tensor(1, d, 1.0));
  p.gamma = store.add(prefix + ".gamma", Tensor(1, d, 1.0));
  p.beta = store.add(prefix + ".beta", Tensor(1, d, 0.0));
  p.eps = eps;
  return p;
}

void require_rows(const Var& X, const MessageGraph& graph, const char* op) {
  if (X.rows() != graph.n_nodes()) {
    throw DimensionError(fmt::format("{}: features {} for a graph of {} nodes", op,
                                     X.shape().str(), graph.n_nodes()));
  }
}

}  // namespace

EncoderParams init_encoder(ParameterStore& store, const EncoderConfig& config, Rng& rng) {
  if (!config.use_lcp && !config.use_mcp) {
    throw ContractError("encoder needs at least one of LCP and MCP");
  }
  if (config.d_in == 0 || config.d_hid == 0 || config.d_out == 0) {
    throw ContractError("encoder widths must be positive");
  }
  if (!(config.graphnorm_eps > 0.0)) throw ContractError("GraphNorm eps must be positive");

  EncoderParams params;
  if (config.use_lcp) {
    params.lcp = LcpParams{store.add("encoder.lcp.W", glorot_uniform(config.d_in, config.d_hid, rng))};
    params.lcp_norm = init_graphnorm(store, "encoder.lcp_norm", config.d_hid, config.graphnorm_eps);
  }
  if (config.use_mcp) {
    McpParams mcp;
    mcp.max_degree_bucket = config.max_degree_bucket;
    for (std::size_t b = 0; b <= config.max_degree_bucket; ++b) {
      mcp.W1.push_back(store.add(fmt::format("encoder.mcp.W1.{}", b),
                                 glorot_uniform(config.d_in, config.d_hid, rng)));
      mcp.W2.push_back(store.add(fmt::format("encoder.mcp.W2.{}", b),
                                 glorot_uniform(config.d_in, config.d_hid, rng)));
    }
    params.mcp = std::move(mcp);
    params.mcp_norm = init_graphnorm(store, "encoder.mcp_norm", config.d_hid, config.graphnorm_eps);
  }
  params.attn.W_s =
      store.add("encoder.attn.W_s", glorot_uniform(config.concat_width(), config.d_out, rng));
  params.attn.a = store.add("encoder.attn.a", glorot_uniform(2 * config.d_out, 1, rng));
  params.attn.leaky_slope = config.leaky_slope;
  return params;
}

Var lcp_forward(const Var& X, const MessageGraph& graph, const LcpParams& params) {
  require_rows(X, graph, "lcp_forward");
  const Var neighbor_mean = segment_mean(X, graph.neighbor_segments());
  return add(matmul(X, params.W), matmul(neighbor_mean, params.W));
}

Var mcp_forward(const Var& X, const MessageGraph& graph, const McpParams& params) {
  require_rows(X, graph, "mcp_forward");
  if (params.W1.size() != params.max_degree_bucket + 1 ||
      params.W2.size() != params.max_degree_bucket + 1) {
    throw ContractError("mcp_forward: weight arrays do not match max_degree_bucket");
  }
  const std::size_t n = graph.n_nodes();
  std::vector<std::vector<std::size_t>> buckets(params.max_degree_bucket + 1);
  for (std::size_t i = 0; i < n; ++i) {
    buckets[std::min(graph.degree(i), params.max_degree_bucket)].push_back(i);
  }

  const Var neighbor_sum = segment_sum(X, graph.neighbor_segments());
  std::vector<Var> parts;
  std::vector<std::size_t> position(n);
  std::size_t offset = 0;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    const auto& nodes = buckets[b];
    if (nodes.empty()) continue;
    parts.push_back(add(matmul(gather_rows(X, nodes), params.W1[b]),
                        matmul(gather_rows(neighbor_sum, nodes), params.W2[b])));
    for (std::size_t k = 0; k < nodes.size(); ++k) position[nodes[k]] = offset + k;
    offset += nodes.size();
  }
  if (parts.empty()) {
    // n == 0
    return matmul(X, params.W1.front());
  }
  return gather_rows(concat_rows(parts), position);
}

Var graphnorm(const Var& H, const GraphNormParams& params) {
  const std::size_t n = H.rows();
  if (n == 0) throw ContractError("graphnorm needs at least one node");
  const Var shifted = sub(H, broadcast_rows(mul(params.zeta, col_mean(H)), n));
  const Var centered = sub(shifted, broadcast_rows(col_mean(shifted), n));
  const Var variance = col_mean(mul(centered, centered));
  const Var inv_std = pow(add_scalar(variance, params.eps), -0.5);
  const Var normed = mul(shifted, broadcast_rows(inv_std, n));
  return add(mul(normed, broadcast_rows(params.gamma, n)), broadcast_rows(params.beta, n));
}

EncoderOutput ssgattn_forward(const Var& H, const MessageGraph& graph, const SsgAttnParams& params) {
  require_rows(H, graph, "ssgattn_forward");
  EncoderOutput out;
  out.projected = matmul(H, params.W_s);

  std::vector<std::size_t> boundaries{0};
  for (std::size_t i = 0; i < graph.n_nodes(); ++i) {
    out.attn_dst.push_back(i);
    out.attn_src.push_back(i);
    for (std::size_t j : graph.neighbors(i)) {
      out.attn_dst.push_back(i);
      out.attn_src.push_back(j);
    }
    boundaries.push_back(out.attn_dst.size());
  }
  out.attn_segments = Segments::contiguous(std::move(boundaries));

  const Var hi = gather_rows(out.projected, out.attn_dst);
  const Var hj = gather_rows(out.projected, out.attn_src);
  const Var concat_score = matmul(concat_cols(hi, hj), params.a);
  const Var gate = sigmoid(row_sum(mul(hi, hj)));
  const Var score = mul(concat_score, gate);
  out.attention = segment_softmax(leaky_relu(score, params.leaky_slope), out.attn_segments);
  out.x_o = segment_sum(scale_rows(hj, out.attention), out.attn_segments);

  out.edge_logit = pair_edge_logits(out.projected, graph.undirected_edges());
  out.edge_prob = sigmoid(out.edge_logit);
  return out;
}

EncoderOutput encode(const Var& X, const MessageGraph& graph, const EncoderParams& params) {
  Var h;
  if (params.lcp) {
    h = graphnorm(lcp_forward(X, graph, *params.lcp), *params.lcp_norm);
  }
  if (params.mcp) {
    const Var hm = graphnorm(mcp_forward(X, graph, *params.mcp), *params.mcp_norm);
    h = h.defined() ? concat_cols(h, hm) : hm;
  }
  if (!h.defined()) throw ContractError("encode: both pre-processors disabled");
  return ssgattn_forward(h, graph, params.attn);
}

Var pair_edge_logits(const Var& projected,
                     std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  std::vector<std::size_t> u;
  std::vector<std::size_t> v;
  u.reserve(pairs.size());
  v.reserve(pairs.size());
  for (auto [a, b] : pairs) {
    u.push_back(a);
    v.push_back(b);
  }
  return row_sum(mul(gather_rows(projected, u), gather_rows(projected, v)));
}

}  // namespace cadgl
