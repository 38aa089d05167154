#include "cadgl/cli/gradcheck_suite.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "cadgl/encoder.hpp"
#include "cadgl/error.hpp"
#include "cadgl/objectives.hpp"
#include "cadgl/ops.hpp"
#include "cadgl/random.hpp"
#include "cadgl/trainer.hpp"
#include "cadgl/vgae.hpp"

namespace cadgl::cli {

namespace {

// Random ops are checked over this many shapes/seeds each.
constexpr std::size_t kOpTrials = 20;

Tensor uniform(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.data()) v = lo + (hi - lo) * uniform01(rng);
  return t;
}

// Entries with |x| in [0.1, 1], away from the kink at zero.
Tensor away_from_zero(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (auto& v : t.data()) v = (bernoulli(rng, 0.5) ? 1.0 : -1.0) * (0.1 + 0.9 * uniform01(rng));
  return t;
}

Var leaf(Tensor t) { return Var(std::move(t), true); }

// sum(out * R) for a fixed random R, so every output entry gets a distinct
// upstream gradient.
Var weighted_sum(const Var& out, const Tensor& R) { return sum(mul(out, Var(R))); }

void merge(GradCheckReport& into, const GradCheckReport& r, std::size_t trial) {
  into.coords_checked += r.coords_checked;
  if (r.max_rel_err > into.max_rel_err || into.worst_coordinate.empty()) {
    into.max_rel_err = std::max(into.max_rel_err, r.max_rel_err);
    into.worst_coordinate = fmt::format("trial {}: {}", trial, r.worst_coordinate);
  }
  into.pass = into.pass && r.pass;
}

using Trial = std::function<GradCheckReport(Rng&, const GradCheckOptions&)>;

GradCheckCase op_case(std::string name, Trial trial) {
  return {std::move(name), "ndtensor", [trial](const GradCheckOptions& opt) {
            GradCheckReport total;
            for (std::size_t t = 0; t < kOpTrials; ++t) {
              Rng rng(mix_seed(opt.seed, t));
              merge(total, trial(rng, opt), t);
            }
            return total;
          }};
}

std::size_t dim(Rng& rng, std::size_t max = 5) { return 1 + uniform_index(rng, max); }

// Unary elementwise op over a random shape; `make` draws the input.
GradCheckCase unary_case(std::string name, std::function<Var(const Var&)> op,
                         std::function<Tensor(std::size_t, std::size_t, Rng&)> make) {
  return op_case(std::move(name), [op, make](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t r = dim(rng), c = dim(rng);
    Var x = leaf(make(r, c, rng));
    const Tensor R = uniform(r, c, rng);
    return finite_diff_check([&] { return weighted_sum(op(x), R); }, {x}, opt);
  });
}

GradCheckCase binary_case(std::string name, std::function<Var(const Var&, const Var&)> op) {
  return op_case(std::move(name), [op](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t r = dim(rng), c = dim(rng);
    Var a = leaf(uniform(r, c, rng));
    Var b = leaf(uniform(r, c, rng));
    const Tensor R = uniform(r, c, rng);
    return finite_diff_check([&] { return weighted_sum(op(a, b), R); }, {a, b}, opt);
  });
}

Tensor any_values(std::size_t r, std::size_t c, Rng& rng) { return uniform(r, c, rng, -2.0, 2.0); }
Tensor positive_values(std::size_t r, std::size_t c, Rng& rng) {
  return uniform(r, c, rng, 0.5, 2.0);
}

// Random grouping of `n` rows into `s` segments, some possibly empty.
Segments random_segments(std::size_t n, std::size_t s, Rng& rng, bool cover_each_row_once) {
  std::vector<std::vector<std::size_t>> lists(s);
  for (std::size_t i = 0; i < n; ++i) {
    lists[uniform_index(rng, s)].push_back(i);
    if (!cover_each_row_once && bernoulli(rng, 0.3)) lists[uniform_index(rng, s)].push_back(i);
  }
  return Segments::from_lists(lists);
}

std::vector<GradCheckCase> ndtensor_cases() {
  std::vector<GradCheckCase> cases;
  cases.push_back(op_case("matmul", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
    Var a = leaf(uniform(m, k, rng));
    Var b = leaf(uniform(k, n, rng));
    const Tensor R = uniform(m, n, rng);
    return finite_diff_check([&] { return weighted_sum(matmul(a, b), R); }, {a, b}, opt);
  }));
  cases.push_back(binary_case("add", [](const Var& a, const Var& b) { return add(a, b); }));
  cases.push_back(binary_case("sub", [](const Var& a, const Var& b) { return sub(a, b); }));
  cases.push_back(binary_case("mul", [](const Var& a, const Var& b) { return mul(a, b); }));
  cases.push_back(unary_case("scale", [](const Var& a) { return scale(a, -1.7); }, any_values));
  cases.push_back(
      unary_case("add_scalar", [](const Var& a) { return add_scalar(a, 0.3); }, any_values));
  cases.push_back(unary_case("sigmoid", [](const Var& a) { return sigmoid(a); }, any_values));
  cases.push_back(unary_case("exp", [](const Var& a) { return exp(a); }, any_values));
  cases.push_back(unary_case("log", [](const Var& a) { return log(a); }, positive_values));
  cases.push_back(
      unary_case("leaky_relu", [](const Var& a) { return leaky_relu(a); }, away_from_zero));
  cases.push_back(unary_case("relu", [](const Var& a) { return relu(a); }, away_from_zero));
  cases.push_back(unary_case("pow", [](const Var& a) { return pow(a, 1.7); }, positive_values));
  cases.push_back(unary_case(
      "clamp", [](const Var& a) { return clamp(a, -0.5, 0.5); },
      [](std::size_t r, std::size_t c, Rng& rng) {
        Tensor t = uniform(r, c, rng);
        for (auto& v : t.data()) {
          if (std::abs(std::abs(v) - 0.5) < 0.05) v *= 0.8;
        }
        return t;
      }));
  cases.push_back(op_case("concat_cols", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t r = dim(rng), c1 = dim(rng), c2 = dim(rng);
    Var a = leaf(uniform(r, c1, rng));
    Var b = leaf(uniform(r, c2, rng));
    const Tensor R = uniform(r, c1 + c2, rng);
    return finite_diff_check([&] { return weighted_sum(concat_cols(a, b), R); }, {a, b}, opt);
  }));
  cases.push_back(op_case("concat_rows", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t c = dim(rng);
    std::vector<Var> parts;
    std::size_t rows = 0;
    for (int i = 0; i < 3; ++i) {
      const std::size_t r = dim(rng, 3);
      rows += r;
      parts.push_back(leaf(uniform(r, c, rng)));
    }
    const Tensor R = uniform(rows, c, rng);
    return finite_diff_check([&] { return weighted_sum(concat_rows(parts), R); }, parts, opt);
  }));
  cases.push_back(op_case("gather_rows", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t r = dim(rng), c = dim(rng), n = dim(rng, 8);
    Var a = leaf(uniform(r, c, rng));
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = uniform_index(rng, r);
    const Tensor R = uniform(n, c, rng);
    return finite_diff_check([&] { return weighted_sum(gather_rows(a, idx), R); }, {a}, opt);
  }));
  cases.push_back(op_case("sum", [](Rng& rng, const GradCheckOptions& opt) {
    Var a = leaf(uniform(dim(rng), dim(rng), rng));
    return finite_diff_check([&] { return sum(mul(a, a)); }, {a}, opt);
  }));
  cases.push_back(op_case("mean", [](Rng& rng, const GradCheckOptions& opt) {
    Var a = leaf(uniform(dim(rng), dim(rng), rng));
    return finite_diff_check([&] { return mean(mul(a, a)); }, {a}, opt);
  }));
  cases.push_back(op_case("row_sum", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t r = dim(rng), c = dim(rng);
    Var a = leaf(uniform(r, c, rng));
    const Tensor R = uniform(r, 1, rng);
    return finite_diff_check([&] { return weighted_sum(row_sum(a), R); }, {a}, opt);
  }));
  cases.push_back(op_case("col_mean", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t r = dim(rng), c = dim(rng);
    Var a = leaf(uniform(r, c, rng));
    const Tensor R = uniform(1, c, rng);
    return finite_diff_check([&] { return weighted_sum(col_mean(a), R); }, {a}, opt);
  }));
  cases.push_back(op_case("broadcast_rows", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t n = dim(rng), c = dim(rng);
    Var a = leaf(uniform(1, c, rng));
    const Tensor R = uniform(n, c, rng);
    return finite_diff_check([&] { return weighted_sum(broadcast_rows(a, n), R); }, {a}, opt);
  }));
  cases.push_back(op_case("scale_rows", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t r = dim(rng), c = dim(rng);
    Var a = leaf(uniform(r, c, rng));
    Var w = leaf(uniform(r, 1, rng));
    const Tensor R = uniform(r, c, rng);
    return finite_diff_check([&] { return weighted_sum(scale_rows(a, w), R); }, {a, w}, opt);
  }));
  cases.push_back(op_case("row_l2_normalize", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t r = dim(rng), c = dim(rng);
    Var a = leaf(away_from_zero(r, c, rng));
    const Tensor R = uniform(r, c, rng);
    return finite_diff_check([&] { return weighted_sum(row_l2_normalize(a), R); }, {a}, opt);
  }));
  cases.push_back(op_case("segment_sum", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t n = dim(rng, 8), c = dim(rng), s = dim(rng, 4);
    Var x = leaf(uniform(n, c, rng));
    const Segments seg = random_segments(n, s, rng, false);
    const Tensor R = uniform(s, c, rng);
    return finite_diff_check([&] { return weighted_sum(segment_sum(x, seg), R); }, {x}, opt);
  }));
  cases.push_back(op_case("segment_mean", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t n = dim(rng, 8), c = dim(rng), s = dim(rng, 4);
    Var x = leaf(uniform(n, c, rng));
    const Segments seg = random_segments(n, s, rng, false);
    const Tensor R = uniform(s, c, rng);
    return finite_diff_check([&] { return weighted_sum(segment_mean(x, seg), R); }, {x}, opt);
  }));
  cases.push_back(op_case("segment_softmax", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t n = dim(rng, 8), s = dim(rng, 4);
    Var x = leaf(uniform(n, 1, rng, -3.0, 3.0));
    const Segments seg = random_segments(n, s, rng, true);
    const Tensor R = uniform(n, 1, rng);
    return finite_diff_check([&] { return weighted_sum(segment_softmax(x, seg), R); }, {x}, opt);
  }));
  cases.push_back(op_case("bce_with_logits", [](Rng& rng, const GradCheckOptions& opt) {
    const std::size_t n = dim(rng, 8);
    Var z = leaf(uniform(n, 1, rng, -4.0, 4.0));
    std::vector<double> y(n);
    for (auto& v : y) v = bernoulli(rng, 0.5) ? 1.0 : 0.0;
    return finite_diff_check([&] { return bce_with_logits(z, y); }, {z}, opt);
  }));
  return cases;
}

// Six drugs, a triangle with a tail plus an isolated node, so the encoder sees
// degrees 0..3.
struct ToyGraph {
  Tensor X;
  MessageGraph graph;
};

ToyGraph toy_graph(std::size_t f_dim, Rng& rng) {
  const std::vector<std::pair<std::size_t, std::size_t>> pairs = {
      {0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}};
  return {uniform(6, f_dim, rng), MessageGraph(6, pairs)};
}

std::vector<Var> leaves_of(const ParameterStore& store) {
  std::vector<Var> out;
  for (const auto& p : store) out.push_back(p.var());
  return out;
}

// Moves GraphNorm parameters off their identity init so the check covers
// general values.
void jitter(ParameterStore& store, Rng& rng) {
  for (auto& p : store) {
    for (auto& v : p.mutable_value().data()) v += 0.3 * (uniform01(rng) - 0.5);
  }
}

EncoderConfig toy_encoder_config(bool lcp = true, bool mcp = true) {
  EncoderConfig c;
  c.d_in = 5;
  c.d_hid = 4;
  c.d_out = 3;
  c.max_degree_bucket = 2;
  c.use_lcp = lcp;
  c.use_mcp = mcp;
  return c;
}

GradCheckCase encoder_case(std::string name,
                           std::function<Var(const Var&, const MessageGraph&,
                                             const EncoderParams&, Rng&)>
                               head) {
  return {std::move(name), "encoder", [head](const GradCheckOptions& opt) {
            Rng rng(opt.seed);
            const ToyGraph toy = toy_graph(5, rng);
            ParameterStore store;
            const EncoderParams params = init_encoder(store, toy_encoder_config(), rng);
            jitter(store, rng);
            Var X = leaf(toy.X);
            auto leaves = leaves_of(store);
            leaves.push_back(X);
            return finite_diff_check(
                [&] {
                  Rng r(mix_seed(opt.seed, 1));
                  return head(X, toy.graph, params, r);
                },
                leaves, opt);
          }};
}

Var weighted_sum_rng(const Var& out, Rng& rng) {
  return weighted_sum(out, uniform(out.rows(), out.cols(), rng));
}

std::vector<GradCheckCase> encoder_cases() {
  std::vector<GradCheckCase> cases;
  cases.push_back(encoder_case("lcp_forward", [](const Var& X, const MessageGraph& g,
                                                 const EncoderParams& p, Rng& rng) {
    return weighted_sum_rng(lcp_forward(X, g, *p.lcp), rng);
  }));
  cases.push_back(encoder_case("mcp_forward", [](const Var& X, const MessageGraph& g,
                                                 const EncoderParams& p, Rng& rng) {
    return weighted_sum_rng(mcp_forward(X, g, *p.mcp), rng);
  }));
  cases.push_back(encoder_case(
      "graphnorm", [](const Var& X, const MessageGraph&, const EncoderParams& p, Rng& rng) {
        return weighted_sum_rng(graphnorm(matmul(X, Var(uniform(5, 4, rng))), *p.lcp_norm), rng);
      }));
  cases.push_back(encoder_case(
      "ssgattn_forward", [](const Var& X, const MessageGraph& g, const EncoderParams& p, Rng& rng) {
        const Var H = matmul(X, Var(uniform(5, 8, rng)));
        return weighted_sum_rng(ssgattn_forward(H, g, p.attn).x_o, rng);
      }));
  cases.push_back(encoder_case(
      "encode", [](const Var& X, const MessageGraph& g, const EncoderParams& p, Rng& rng) {
        const EncoderOutput out = encode(X, g, p);
        return add(weighted_sum_rng(out.x_o, rng), weighted_sum_rng(out.edge_prob, rng));
      }));
  cases.push_back(encoder_case(
      "pair_edge_logits", [](const Var& X, const MessageGraph& g, const EncoderParams& p, Rng& rng) {
        const std::vector<std::pair<std::size_t, std::size_t>> pairs = {{0, 1}, {4, 5}, {2, 2}};
        return weighted_sum_rng(pair_edge_logits(encode(X, g, p).projected, pairs), rng);
      }));
  return cases;
}

struct ToyVgae {
  ParameterStore store;
  VgaeParams params;
  Var structural;
  Var property;
  std::vector<std::size_t> types;
  std::vector<double> labels;
};

std::unique_ptr<ToyVgae> toy_vgae(std::uint64_t seed) {
  auto t = std::make_unique<ToyVgae>();
  Rng rng(seed);
  VgaeConfig c;
  c.struct_dim = 3;
  c.feature_dim = 2;
  c.latent_dim = 4;
  c.n_types = 3;
  c.type_dim = 2;
  c.hidden = {5, 4};
  t->params = init_vgae(t->store, c, rng);
  jitter(t->store, rng);
  const std::size_t P = 5;
  t->structural = leaf(uniform(P, 2 * c.struct_dim, rng));
  t->property = leaf(uniform(P, 2 * c.feature_dim, rng));
  t->types = {0, 1, 2, 1, 0};
  t->labels = {1, 0, 1, 1, 0};
  return t;
}

GradCheckCase vgae_case(std::string name, std::function<Var(const ToyVgae&, Rng&)> head) {
  return {std::move(name), "vgae", [head](const GradCheckOptions& opt) {
            auto toy = toy_vgae(opt.seed);
            auto leaves = leaves_of(toy->store);
            leaves.push_back(toy->structural);
            leaves.push_back(toy->property);
            return finite_diff_check(
                [&] {
                  Rng r(mix_seed(opt.seed, 2));
                  return head(*toy, r);
                },
                leaves, opt);
          }};
}

Tensor frozen_noise(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (auto& v : t.data()) v = standard_normal(rng);
  return t;
}

std::vector<GradCheckCase> vgae_cases() {
  std::vector<GradCheckCase> cases;
  cases.push_back(vgae_case("latent_encode", [](const ToyVgae& t, Rng& rng) {
    const PairLatent l = latent_encode(t.structural, t.property, t.params.latent);
    return add(weighted_sum_rng(l.mu, rng), weighted_sum_rng(l.log_sigma, rng));
  }));
  cases.push_back(vgae_case("reparameterize", [](const ToyVgae& t, Rng& rng) {
    const PairLatent l = latent_encode(t.structural, t.property, t.params.latent);
    const Var e = reparameterize(l.mu, l.log_sigma, frozen_noise(l.mu.rows(), l.mu.cols(), rng));
    return weighted_sum_rng(e, rng);
  }));
  cases.push_back(vgae_case("decode", [](const ToyVgae& t, Rng& rng) {
    const PairLatent l = latent_encode(t.structural, t.property, t.params.latent);
    return weighted_sum_rng(decode(l.mu, t.types, t.params.decoder, t.params.types), rng);
  }));
  cases.push_back(vgae_case("predict", [](const ToyVgae& t, Rng& rng) {
    const PairLatent l = latent_encode(t.structural, t.property, t.params.latent);
    const Var Z = decode(l.mu, t.types, t.params.decoder, t.params.types);
    return weighted_sum_rng(predict(Z, t.params.decoder), rng);
  }));
  cases.push_back(vgae_case("ce_chain", [](const ToyVgae& t, Rng& rng) {
    const PairLatent l = latent_encode(t.structural, t.property, t.params.latent);
    const Var e = reparameterize(l.mu, l.log_sigma, frozen_noise(l.mu.rows(), l.mu.cols(), rng));
    const Var Z = decode(e, t.types, t.params.decoder, t.params.types);
    return ce_loss(predict_logit(Z, t.params.decoder), t.labels);
  }));
  return cases;
}

std::vector<GradCheckCase> loss_cases() {
  std::vector<GradCheckCase> cases;
  cases.push_back({"ce_loss", "loss", [](const GradCheckOptions& opt) {
                     Rng rng(opt.seed);
                     Var z = leaf(uniform(9, 1, rng, -3.0, 3.0));
                     std::vector<double> y(9);
                     for (auto& v : y) v = bernoulli(rng, 0.5) ? 1.0 : 0.0;
                     return finite_diff_check([&] { return ce_loss(z, y); }, {z}, opt);
                   }});
  cases.push_back({"kl_loss", "loss", [](const GradCheckOptions& opt) {
                     Rng rng(opt.seed);
                     Var mu = leaf(uniform(4, 3, rng));
                     Var ls = leaf(uniform(4, 3, rng));
                     return finite_diff_check([&] { return kl_loss(mu, ls); }, {mu, ls}, opt);
                   }});
  cases.push_back({"ss_loss", "loss", [](const GradCheckOptions& opt) {
                     Rng rng(opt.seed);
                     Var z = leaf(uniform(12, 1, rng, -3.0, 3.0));
                     std::vector<double> y(12);
                     for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 6 ? 1.0 : 0.0;
                     return finite_diff_check(
                         [&] {
                           Rng r(mix_seed(opt.seed, 3));
                           return ss_loss(z, y, 0.8, r);
                         },
                         {z}, opt);
                   }});
  cases.push_back({"cadgl_total", "loss", [](const GradCheckOptions& opt) {
                     Rng rng(opt.seed);
                     const ToyGraph toy = toy_graph(5, rng);
                     std::vector<Edge> edges = {{0, 1, 0}, {2, 1, 1}, {0, 2, 0}, {2, 3, 1}, {4, 3, 0}};
                     std::vector<std::string> ids = {"a", "b", "c", "d", "e", "f"};
                     const DDIDataset data(ids, {"t0", "t1"}, toy.X, edges);
                     const std::vector<std::size_t> all = {0, 1, 2, 3, 4};
                     const MessageGraph graph = build_message_graph(data, all);
                     const auto batch = labelled_pairs(data, all, mix_seed(opt.seed, 4));
                     std::vector<double> labels;
                     for (const auto& p : batch) labels.push_back(p.label);
                     TrainConfig config;
                     config.seed = opt.seed;
                     CadglModel model(config, dims_of(data));
                     jitter(model.parameters(), rng);
                     const Var X(data.features());
                     return finite_diff_check(
                         [&] {
                           Rng r(mix_seed(opt.seed, 5));
                           return cadgl_loss(model, X, graph, batch, labels, r).total;
                         },
                         leaves_of(model.parameters()), opt);
                   }});
  return cases;
}

}  // namespace

const std::vector<GradCheckCase>& gradcheck_cases() {
  static const std::vector<GradCheckCase> cases = [] {
    std::vector<GradCheckCase> all;
    for (auto group : {ndtensor_cases(), encoder_cases(), vgae_cases(), loss_cases()}) {
      for (auto& c : group) all.push_back(std::move(c));
    }
    return all;
  }();
  return cases;
}

std::vector<GradCheckRow> run_gradchecks(const std::string& scope, const GradCheckOptions& options) {
  static const std::array<const char*, 5> scopes = {"all", "ndtensor", "encoder", "vgae", "loss"};
  if (std::find(scopes.begin(), scopes.end(), scope) == scopes.end()) {
    throw ConfigError(fmt::format("unknown gradcheck scope '{}'", scope));
  }
  std::vector<GradCheckRow> rows;
  for (const auto& c : gradcheck_cases()) {
    if (scope != "all" && c.scope != scope) continue;
    rows.push_back({c.name, c.scope, c.run(options)});
  }
  return rows;
}

}  // namespace cadgl::cli
