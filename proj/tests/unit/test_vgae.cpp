#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cadgl/error.hpp"
#include "cadgl/gradcheck.hpp"
#include "cadgl/objectives.hpp"
#include "cadgl/vgae.hpp"

using namespace cadgl;

namespace {

Tensor uniform(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(r, c);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

VgaeParams small_vgae(Rng& rng, ParameterStore& store) {
  VgaeConfig cfg;
  cfg.struct_dim = 3;
  cfg.feature_dim = 2;
  cfg.latent_dim = 4;
  cfg.n_types = 3;
  cfg.type_dim = 2;
  cfg.hidden = {5, 3};
  return init_vgae(store, cfg, rng);
}

}  // namespace

TEST(PairInput, HalvesFollowPairOrder) {
  const Var x_o(Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}}));
  const Var X_f(Tensor::from_rows({{7}, {8}, {9}}));
  const std::vector<std::size_t> d1{0, 2}, d2{2, 2};
  const PairInputs in = pair_input(x_o, X_f, d1, d2);
  EXPECT_EQ(in.structural.value(), Tensor::from_rows({{1, 2, 5, 6}, {5, 6, 5, 6}}));
  EXPECT_EQ(in.property.value(), Tensor::from_rows({{7, 9}, {9, 9}}));
  const PairInputs swapped = pair_input(x_o, X_f, d2, d1);
  EXPECT_EQ(swapped.structural.value()(0, 0), 5.0);
  EXPECT_NE(swapped.structural.value(), in.structural.value());
}

TEST(PairInput, OutOfRangeIndexIsIndexError) {
  const Var x_o(Tensor(3, 2)), X_f(Tensor(3, 1));
  const std::vector<std::size_t> ok{0}, bad{3};
  EXPECT_THROW(pair_input(x_o, X_f, ok, bad), IndexError);
}

TEST(LatentEncode, HandCase) {
  const LatentParams p{Parameter("W_mu", Tensor::column({1, 1, 1})),
                       Parameter("W_sigma", Tensor(3, 1))};
  const PairLatent out =
      latent_encode(Var(Tensor::from_rows({{3, 4}})), Var(Tensor::from_rows({{0}})), p);
  EXPECT_NEAR(out.mu.value().item(), 1.4, 1e-12);
  EXPECT_EQ(out.log_sigma.value().item(), 0.0);
}

TEST(LatentEncode, ZeroWeightsAnnihilate) {
  Rng rng(1);
  const LatentParams p{Parameter("W_mu", Tensor(5, 2)), Parameter("W_sigma", Tensor(5, 2))};
  const PairLatent out = latent_encode(Var(uniform(4, 3, rng)), Var(uniform(4, 2, rng)), p);
  for (double v : out.mu.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(LatentEncode, ScaleInvariant) {
  Rng rng(2);
  const LatentParams p{Parameter("W_mu", uniform(7, 4, rng)),
                       Parameter("W_sigma", uniform(7, 4, rng))};
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor s = uniform(3, 4, rng), f = uniform(3, 3, rng);
    const double k = std::exp(uniform(1, 1, rng, -3, 3).item());
    Tensor ks = s, kf = f;
    for (auto& v : ks.data()) v *= k;
    for (auto& v : kf.data()) v *= k;
    const PairLatent a = latent_encode(Var(s), Var(f), p);
    const PairLatent b = latent_encode(Var(ks), Var(kf), p);
    for (std::size_t i = 0; i < a.mu.value().size(); ++i) {
      EXPECT_NEAR(a.mu.value()[i], b.mu.value()[i], 1e-12);
      EXPECT_NEAR(a.log_sigma.value()[i], b.log_sigma.value()[i], 1e-12);
    }
  }
}

TEST(LatentEncode, WidthMismatchIsDimensionError) {
  const LatentParams p{Parameter("W_mu", Tensor(4, 2)), Parameter("W_sigma", Tensor(4, 2))};
  EXPECT_THROW(latent_encode(Var(Tensor(1, 2)), Var(Tensor(1, 1)), p), DimensionError);
}

TEST(Reparameterize, EvalModeIsExactlyMu) {
  Rng rng(3);
  const Var mu(uniform(5, 4, rng));
  EXPECT_EQ(reparameterize_eval(mu).value(), mu.value());
}

TEST(Reparameterize, ExtremeLogSigmaStaysFinite) {
  Rng rng(4);
  const Var mu(Tensor(2, 2));
  const Var ls(Tensor::from_rows({{-1e308, 1e308}, {-800, 800}}));
  const Tensor e = reparameterize(mu, ls, rng).value();
  EXPECT_TRUE(e.all_finite());
}

TEST(Reparameterize, HandNoise) {
  const Var mu(Tensor::from_rows({{1.0, -2.0}}));
  const Var ls(Tensor::from_rows({{std::log(4.0), 0.0}}));
  const Tensor e = reparameterize(mu, ls, Tensor::from_rows({{0.5, -1.0}})).value();
  EXPECT_NEAR(e[0], 1.0 + 0.5 * 2.0, 1e-15);
  EXPECT_NEAR(e[1], -3.0, 1e-15);
}

TEST(Reparameterize, StandardMomentsOverManyDraws) {
  Rng rng(5);
  const std::size_t n = 100000;
  const Tensor e = reparameterize(Var(Tensor(n, 1)), Var(Tensor(n, 1)), rng).value();
  double mean = 0.0, var = 0.0;
  for (double v : e.data()) mean += v;
  mean /= n;
  for (double v : e.data()) var += (v - mean) * (v - mean);
  var /= (n - 1);
  EXPECT_LE(std::abs(mean), 0.02);
  EXPECT_LE(std::abs(var - 1.0), 0.02);
}

TEST(Reparameterize, ShiftedScaledMoments) {
  Rng rng(6);
  const std::size_t n = 100000;
  const double mu = 1.5, log_var = std::log(0.25);
  const Tensor e = reparameterize(Var(Tensor(n, 1, mu)), Var(Tensor(n, 1, log_var)), rng).value();
  double mean = 0.0, var = 0.0;
  for (double v : e.data()) mean += v;
  mean /= n;
  for (double v : e.data()) var += (v - mean) * (v - mean);
  var /= (n - 1);
  EXPECT_LE(std::abs(mean - mu), 0.02);
  EXPECT_LE(std::abs(var - 0.25), 0.02);
}

TEST(Reparameterize, SameSeedSameStream) {
  Rng a(7), b(7);
  const Var mu(Tensor(3, 3)), ls(Tensor(3, 3));
  EXPECT_EQ(reparameterize(mu, ls, a).value(), reparameterize(mu, ls, b).value());
}

TEST(Decode, OneLayerHandCase) {
  DecoderParams dec;
  dec.mlp.push_back({Parameter("w", Tensor::column({1, 1, 1})), Parameter("b", Tensor(1, 1))});
  const TypeEmbedding emb{Parameter("emb", Tensor::from_rows({{2}}))};
  const std::vector<std::size_t> types{0};
  const Tensor Z = decode(Var(Tensor::from_rows({{1, -1}})), types, dec, emb).value();
  EXPECT_EQ(Z.item(), 2.0);
}

TEST(Decode, ZeroWeightsGiveBiasChain) {
  DecoderParams dec;
  dec.mlp.push_back({Parameter("w0", Tensor(3, 2)), Parameter("b0", Tensor::from_rows({{0.5, -1}}))});
  dec.mlp.push_back({Parameter("w1", Tensor(2, 2)), Parameter("b1", Tensor::from_rows({{-2, 3}}))});
  const TypeEmbedding emb{Parameter("emb", Tensor::from_rows({{4}, {5}}))};
  const std::vector<std::size_t> types{0, 1};
  const Tensor Z = decode(Var(Tensor::from_rows({{1, 2}, {3, 4}})), types, dec, emb).value();
  EXPECT_EQ(Z, Tensor::from_rows({{0, 3}, {0, 3}}));
}

TEST(Decode, TypeChangesOutput) {
  Rng rng(8);
  ParameterStore store;
  const VgaeParams p = small_vgae(rng, store);
  const Var e(Tensor::from_rows({{0.3, -0.2, 0.9, 0.1}, {0.3, -0.2, 0.9, 0.1}}));
  const std::vector<std::size_t> types{0, 2};
  const Tensor logit = predict_logit(decode(e, types, p.decoder, p.types), p.decoder).value();
  EXPECT_NE(logit[0], logit[1]);
  const std::vector<std::size_t> bad{0, 3};
  EXPECT_THROW(decode(e, bad, p.decoder, p.types), IndexError);
}

TEST(Predict, SigmoidOfFcl) {
  DecoderParams dec;
  dec.final_fcl = {Parameter("w", Tensor::column({0, 0})), Parameter("b", Tensor(1, 1))};
  EXPECT_EQ(predict(Var(Tensor::from_rows({{3, -7}})), dec).value().item(), 0.5);
  dec.final_fcl.bias.mutable_value()[0] = std::log(3.0);
  EXPECT_NEAR(predict(Var(Tensor::from_rows({{3, -7}})), dec).value().item(), 0.75, 1e-15);
  for (double z : {-30.0, -1.0, 5.0, 30.0}) {
    dec.final_fcl.bias.mutable_value()[0] = z;
    const double p = predict(Var(Tensor(1, 2)), dec).value().item();
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(VgaePipeline, EvalModeIsDeterministic) {
  Rng rng(9);
  ParameterStore store;
  const VgaeParams p = small_vgae(rng, store);
  const Var x_o(uniform(4, 3, rng)), X_f(uniform(4, 2, rng));
  const std::vector<std::size_t> d1{0, 1, 3}, d2{2, 3, 0}, types{0, 1, 2};
  auto run = [&] {
    const PairInputs in = pair_input(x_o, X_f, d1, d2);
    const PairLatent lat = latent_encode(in.structural, in.property, p.latent);
    return predict(decode(reparameterize_eval(lat.mu), types, p.decoder, p.types), p.decoder)
        .value();
  };
  EXPECT_EQ(run(), run());
}

TEST(VgaePipeline, CeChainPassesFiniteDifferenceWithFrozenNoise) {
  Rng rng(10);
  ParameterStore store;
  const VgaeParams p = small_vgae(rng, store);
  std::vector<Var> leaves;
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  for (auto& param : store) {
    for (auto& v : param.mutable_value().data()) v += jitter(rng);
    leaves.push_back(param.var());
  }
  const Var x_o(uniform(4, 3, rng)), X_f(uniform(4, 2, rng));
  const std::vector<std::size_t> d1{0, 1, 3, 2}, d2{2, 3, 0, 1}, types{0, 1, 2, 1};
  const std::vector<double> labels{1, 0, 1, 0};
  const Tensor noise = uniform(4, 4, rng);
  const auto report = finite_diff_check(
      [&] {
        const PairInputs in = pair_input(x_o, X_f, d1, d2);
        const PairLatent lat = latent_encode(in.structural, in.property, p.latent);
        const Var e = reparameterize(lat.mu, lat.log_sigma, noise);
        return ce_loss(predict_logit(decode(e, types, p.decoder, p.types), p.decoder), labels);
      },
      leaves);
  EXPECT_TRUE(report.pass) << report.max_rel_err << " at " << report.worst_coordinate;
}
