// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   cadgl_acceptance [--out DIR] [N ...]
//
// With criterion numbers, only those run. Curve CSVs and the ablation table go
// to DIR (default ./acceptance_out).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cadgl/checkpoint.hpp"
#include "cadgl/cli/ablation.hpp"
#include "cadgl/cli/gradcheck_suite.hpp"
#include "cadgl/encoder.hpp"
#include "cadgl/error.hpp"
#include "cadgl/metrics.hpp"
#include "cadgl/objectives.hpp"
#include "cadgl/synth.hpp"
#include "cadgl/trainer.hpp"
#include "cadgl/vgae.hpp"
#include "fixtures.hpp"

using namespace cadgl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

constexpr double kFixtureTol = 1e-10;
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kMomentTol = 0.02;
constexpr double kSsTol = 1e-12;
constexpr double kOverfitLoss = 0.05;
constexpr double kAurocBar = 0.85;
constexpr double kAuprcBar = 0.80;
constexpr double kGradSeconds = 60;
constexpr double kOverfitSeconds = 30;
constexpr double kDeskSeconds = 300;
constexpr std::size_t kSeeds = 5;

fs::path g_out = "acceptance_out";

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects individual checks for one criterion.
struct Checks {
  bool ok = true;
  std::vector<std::string> failures;
  void expect(bool cond, const std::string& what) {
    if (!cond) ok = false, failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    expect(std::abs(got - want) <= tol, fmt::format("{}: got {:.17g}, want {:.17g}", what, got, want));
  }
  std::string detail() const {
    if (failures.empty()) return "";
    std::string s = failures.front();
    if (failures.size() > 1) s += fmt::format(" (+{} more)", failures.size() - 1);
    return s;
  }
};

struct Outcome {
  bool pass;
  std::string detail;
};

Tensor identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor uniform(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(r, c);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double bce_scalar(double z, double y) {
  const double p = sigmoid_ref(z);
  return -(y * std::log(p) + (1 - y) * std::log(1 - p));
}

double brute_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1;
      if (s[i] > s[j]) wins += 1;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

GraphNormParams identity_norm(std::size_t d, double eps) {
  return {Parameter("zeta", Tensor(1, d, 1.0)), Parameter("gamma", Tensor(1, d, 1.0)),
          Parameter("beta", Tensor(1, d, 0.0)), eps};
}

// --- 1 ---------------------------------------------------------------------

Outcome gradient_soundness() {
  const auto t0 = Clock::now();
  GradCheckOptions options;
  options.tolerance = kGradTol;
  options.step = kGradStep;
  const auto rows = cli::run_gradchecks("all", options);
  const double secs = seconds_since(t0);
  Checks c;
  double worst = 0.0;
  for (const auto& r : rows) {
    worst = std::max(worst, r.report.max_rel_err);
    c.expect(r.report.pass, fmt::format("{} rel err {:.3e}", r.name, r.report.max_rel_err));
  }
  c.expect(secs < kGradSeconds, fmt::format("took {:.1f} s", secs));
  return {c.ok, fmt::format("{} checks, worst rel err {:.2e} (< {:g}), {:.1f} s (< {:g} s) {}",
                            rows.size(), worst, kGradTol, secs, kGradSeconds, c.detail())};
}

// --- 2 ---------------------------------------------------------------------

Outcome layer_fixtures() {
  Checks c;

  {  // local context: h = xW + mean_N(x) W
    const Tensor W = Tensor::from_rows({{1, 2}, {0, 1}});
    const Tensor h = lcp_forward(Var(Tensor::from_rows({{1, 2}, {3, 4}})),
                                 MessageGraph(2, Pairs{{0, 1}}), {Parameter("W", W)})
                         .value();
    // both rows: (1+3, 2+4) W = (4, 14)
    for (std::size_t i = 0; i < 2; ++i) {
      c.near(h(i, 0), 4.0, kFixtureTol, "lcp");
      c.near(h(i, 1), 14.0, kFixtureTol, "lcp");
    }
  }
  {  // molecular context with degree-indexed weights
    McpParams p;
    p.max_degree_bucket = 2;
    for (std::size_t b = 0; b <= 2; ++b) {
      p.W1.emplace_back("W1", Tensor(2, 2, 0.0));
      p.W2.emplace_back("W2", Tensor(2, 2, 0.0));
    }
    p.W1[1] = Parameter("W1", Tensor::from_rows({{2, 0}, {0, 3}}));
    p.W2[1] = Parameter("W2", identity(2));
    p.W1[2] = Parameter("W1", identity(2));
    p.W2[2] = Parameter("W2", Tensor::from_rows({{0, 1}, {1, 0}}));
    // path 0 - 1 - 2: degrees 1, 2, 1
    const Tensor X = Tensor::from_rows({{1, 0}, {0, 1}, {2, 2}});
    const Tensor h = mcp_forward(Var(X), MessageGraph(3, Pairs{{0, 1}, {1, 2}}), p).value();
    const Tensor want = Tensor::from_rows({{2, 1}, {2, 4}, {4, 7}});
    for (std::size_t i = 0; i < want.size(); ++i) c.near(h[i], want[i], kFixtureTol, "mcp");
  }
  {  // attention: P = H, a picks the destination's first coordinate
    const Tensor H = Tensor::from_rows({{1, 0}, {0, 1}});
    const SsgAttnParams p{Parameter("W_s", identity(2)), Parameter("a", Tensor::column({1, 0, 0, 0})),
                          0.2};
    const EncoderOutput out = ssgattn_forward(Var(H), MessageGraph(2, Pairs{{0, 1}}), p);
    // node 0: self score sigmoid(1), neighbour score 1 * sigmoid(0) = 0.5
    const double s_self = sigmoid_ref(1.0), s_nb = 0.5;
    const double a_self = std::exp(s_self) / (std::exp(s_self) + std::exp(s_nb));
    c.near(out.x_o.value()(0, 0), a_self, kFixtureTol, "attention x_o(0,0)");
    c.near(out.x_o.value()(0, 1), 1 - a_self, kFixtureTol, "attention x_o(0,1)");
    // node 1: a^T[P1||.] = 0, so scores are 0 and the split is even
    c.near(out.x_o.value()(1, 0), 0.5, kFixtureTol, "attention x_o(1,0)");
    c.near(out.x_o.value()(1, 1), 0.5, kFixtureTol, "attention x_o(1,1)");
    c.near(out.edge_prob.value().item(), 0.5, kFixtureTol, "edge prob");
  }
  {  // GraphNorm
    const Tensor x = Tensor::column({1.0, 2.0, 6.0});
    const double eps = 1e-5;
    const Tensor out = graphnorm(Var(x), identity_norm(1, eps)).value();
    const double var = 14.0 / 3.0;
    for (std::size_t i = 0; i < 3; ++i)
      c.near(out[i], (x[i] - 3.0) / std::sqrt(var + eps), kFixtureTol, "graphnorm");
    GraphNormParams half = identity_norm(1, eps);
    half.zeta.mutable_value()[0] = 0.5;
    half.gamma.mutable_value()[0] = 2.0;
    half.beta.mutable_value()[0] = -1.0;
    const Tensor o2 = graphnorm(Var(x), half).value();
    // shifted = x - 1.5 = (-0.5, 0.5, 4.5): mean 1.5, population var 14/3
    for (std::size_t i = 0; i < 3; ++i)
      c.near(o2[i], (x[i] - 1.5) / std::sqrt(var + eps) * 2.0 - 1.0, kFixtureTol, "graphnorm zeta");
  }
  {  // latent map on row-normalized halves
    const LatentParams p{Parameter("W_mu", Tensor::column({1, 1, 1})),
                         Parameter("W_sigma", Tensor::column({0, 2, 0}))};
    const PairLatent lat =
        latent_encode(Var(Tensor::from_rows({{3, 4}})), Var(Tensor::from_rows({{-2}})), p);
    c.near(lat.mu.value().item(), 0.6 + 0.8 - 1.0, kFixtureTol, "latent mu");
    c.near(lat.log_sigma.value().item(), 1.6, kFixtureTol, "latent log sigma");
  }
  c.near(ce_loss(Var(Tensor::column({0.0, 0.0})), std::vector<double>{1, 0}).value().item(),
         std::log(2.0), kFixtureTol, "ce at zero logit");
  c.near(kl_loss(Var(Tensor::scalar(1.0)), Var(Tensor::scalar(0.0))).value().item(), 0.5,
         kFixtureTol, "kl at mu=1");
  return {c.ok, fmt::format("lcp, mcp, attention, graphnorm, latent, ce, kl within {:g} {}",
                            kFixtureTol, c.detail())};
}

// --- 3 ---------------------------------------------------------------------

Outcome probabilistic_invariants() {
  Checks c;
  Rng rng(3);

  double worst_attn = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30;
    Pairs pairs;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (bernoulli(rng, 0.15)) pairs.emplace_back(i, j);
    const MessageGraph g(n, pairs);
    ParameterStore store;
    EncoderConfig cfg;
    cfg.d_in = 6;
    cfg.d_hid = 8;
    cfg.d_out = 5;
    cfg.max_degree_bucket = 4;
    const EncoderParams params = init_encoder(store, cfg, rng);
    const EncoderOutput out = encode(Var(uniform(n, 6, rng, -2, 2)), g, params);
    std::vector<double> sums(n, 0.0);
    const Tensor& alpha = out.attention.value();
    for (std::size_t k = 0; k < out.attn_dst.size(); ++k) sums[out.attn_dst[k]] += alpha[k];
    for (double s : sums) worst_attn = std::max(worst_attn, std::abs(s - 1.0));
  }
  c.expect(worst_attn <= 1e-10, fmt::format("attention row sum off by {:.2e}", worst_attn));

  const double eps = 1e-5;
  double worst_mean = 0.0, worst_var = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 40, d = 6;
    const Tensor out = graphnorm(Var(uniform(n, d, rng, -3, 5)), identity_norm(d, eps)).value();
    for (std::size_t col = 0; col < d; ++col) {
      double m = 0.0, v = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += out(i, col);
      m /= n;
      for (std::size_t i = 0; i < n; ++i) v += (out(i, col) - m) * (out(i, col) - m);
      v /= n;
      worst_mean = std::max(worst_mean, std::abs(m));
      worst_var = std::max(worst_var, std::abs(v - 1.0));
    }
  }
  c.expect(worst_mean <= 1e-10, fmt::format("graphnorm mean {:.2e}", worst_mean));
  // var/(var + eps) with var >= 0.1 on these inputs
  c.expect(worst_var <= 10 * eps, fmt::format("graphnorm variance off by {:.2e}", worst_var));

  double worst_moment = 0.0;
  for (const auto& [mu, var] : std::vector<std::pair<double, double>>{{0.0, 1.0}, {1.5, 0.25}}) {
    const std::size_t n = 100000;
    const Tensor e =
        reparameterize(Var(Tensor(n, 1, mu)), Var(Tensor(n, 1, std::log(var))), rng).value();
    double m = 0.0, v = 0.0;
    for (double x : e.data()) m += x;
    m /= n;
    for (double x : e.data()) v += (x - m) * (x - m);
    v /= n - 1;
    worst_moment = std::max({worst_moment, std::abs(m - mu), std::abs(v - var)});
  }
  c.expect(worst_moment <= kMomentTol, fmt::format("moment error {:.4f}", worst_moment));

  const double grid[] = {-2.0, -0.5, -1e-3, 0.0, 1e-3, 0.5, 2.0};
  for (double m : grid) {
    for (double s : grid) {
      const double kl = kl_loss(Var(Tensor::scalar(m)), Var(Tensor::scalar(s))).value().item();
      if (m == 0.0 && s == 0.0) c.expect(kl == 0.0, fmt::format("kl at origin {:.3e}", kl));
      else c.expect(kl > 0.0, fmt::format("kl({}, {}) = {:.3e}", m, s, kl));
    }
  }
  return {c.ok, fmt::format("attn sum err {:.1e}, graphnorm mean {:.1e} var err {:.1e}, "
                            "moment err {:.4f} (<= {:g}), kl grid {}",
                            worst_attn, worst_mean, worst_var, worst_moment, kMomentTol,
                            c.detail())};
}

// --- 4 ---------------------------------------------------------------------

Outcome oracle_equivalence() {
  Checks c;
  std::mt19937_64 rng(4);
  int sets = 0;
  for (int trial = 0; trial < 300; ++trial, ++sets) {
    const std::size_t n = 2 + rng() % 999;
    const int levels = trial % 3 == 0 ? 0 : 1 + static_cast<int>(rng() % 20);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = levels == 0 ? std::uniform_real_distribution<double>(0, 1)(rng)
                         : static_cast<double>(rng() % levels) / levels;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    const double got = *auroc(s, y), want = brute_auroc(s, y);
    c.expect(got == want, fmt::format("auroc set {} (n={}): {:.17g} vs {:.17g}", trial, n, got, want));
  }

  Rng r2(5);
  std::normal_distribution<double> z(0.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(r2, 200);
    std::vector<double> logits(n), labels(n);
    double want = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] = z(r2);
      labels[i] = static_cast<double>(uniform_index(r2, 2));
      want += bce_scalar(logits[i], labels[i]);
    }
    want /= static_cast<double>(n);
    Rng unused(0);
    const double got = ss_loss(Var(Tensor::column(logits)), labels, 1.0, unused).value().item();
    worst = std::max(worst, std::abs(got - want));
  }
  c.expect(worst <= kSsTol, fmt::format("ss_loss deviates by {:.2e}", worst));
  return {c.ok, fmt::format("{} auroc sets exact, ss_loss max dev {:.1e} (<= {:g}) {}", sets, worst,
                            kSsTol, c.detail())};
}

// --- 5 ---------------------------------------------------------------------

Outcome overfit_sanity() {
  const DDIDataset ds = cadgl::testing::overfit_dataset();
  TrainConfig cfg;
  cfg.epochs = 200;
  const auto t0 = Clock::now();
  const TrainResult r = train(ds, cadgl::testing::all_train(ds), cfg);
  const double secs = seconds_since(t0);
  std::size_t reached = 0;
  double best_acc = 0.0, min_total = INFINITY;
  for (const auto& e : r.history) {
    best_acc = std::max(best_acc, e.train_accuracy);
    min_total = std::min(min_total, e.loss.total);
    if (reached == 0 && e.train_accuracy == 1.0 && e.loss.total < kOverfitLoss) reached = e.epoch;
  }
  const auto& last = r.history.back();
  Checks c;
  c.expect(reached != 0, "never reached accuracy 1.0 with total < 0.05");
  c.expect(secs < kOverfitSeconds, fmt::format("took {:.1f} s", secs));
  return {c.ok,
          fmt::format("reached at epoch {}; final acc {:.3f} total {:.4f}; best acc {:.3f}, "
                      "min total {:.4f} (< {:g}); {:.1f} s (< {:g} s)",
                      reached == 0 ? std::string("never") : std::to_string(reached),
                      last.train_accuracy, last.loss.total, best_acc, min_total, kOverfitLoss,
                      secs, kOverfitSeconds)};
}

// --- 6 and 7 share the desk-scale fixture ------------------------------------

struct DeskFixture {
  DDIDataset dataset;
  Split split;
};

const DeskFixture& desk() {
  static const DeskFixture f = [] {
    DeskFixture d{synth_generate(SynthParams{}), {}};
    d.split = split_edges(d.dataset, {0.6, 0.2, 0.2}, 0);
    return d;
  }();
  return f;
}

Outcome desk_experiment() {
  const auto t0 = Clock::now();
  const RepeatedResult r = run_repeated(desk().dataset, desk().split, TrainConfig{}, kSeeds);
  const double secs = seconds_since(t0);
  std::cout << "  " << format_table_row("CADGL (synthetic, 5 seeds)", r) << "\n";
  Checks c;
  c.expect(r.auroc.mean >= kAurocBar, "auroc below bar");
  c.expect(r.auprc.mean >= kAuprcBar, "auprc below bar");
  c.expect(secs < kDeskSeconds, "over time budget");
  return {c.ok, fmt::format("test AUROC {:.4f} (>= {:g}), AUPRC {:.4f} (>= {:g}), {:.0f} s "
                            "(< {:g} s) {}",
                            r.auroc.mean, kAurocBar, r.auprc.mean, kAuprcBar, secs, kDeskSeconds,
                            c.detail())};
}

Outcome ablation_shape() {
  const cli::AblationReport report =
      cli::run_ablation(desk().dataset, desk().split, TrainConfig{}, kSeeds);
  fs::create_directories(g_out);
  const std::string table = cli::format_ablation_table(report);
  std::ofstream(g_out / "ablation.tsv") << table;
  Checks c;
  for (const auto& row : report.rows) {
    const fs::path csv = g_out / ("curve_" + row.label + ".csv");
    std::ofstream(csv) << cli::curve_csv(row.result);
    std::ifstream in(csv);
    const auto lines = std::count(std::istreambuf_iterator<char>(in), {}, '\n');
    c.expect(static_cast<std::size_t>(lines) == TrainConfig{}.epochs + 1,
             fmt::format("{} has {} lines", csv.string(), lines));
  }
  std::istringstream rows(table);
  for (std::string line; std::getline(rows, line);) std::cout << "  " << line << "\n";
  for (const auto& w : report.warnings) std::cout << "  warning: " << w << "\n";
  c.expect(report.within_one_std, "both < a single-processor mean - 1 std");
  return {c.ok, fmt::format("hard check {}, soft ordering {}, curves in {} {}",
                            report.within_one_std ? "holds" : "fails",
                            report.ordering_holds ? "holds" : "does not hold", g_out.string(),
                            c.detail())};
}

// --- 8 ---------------------------------------------------------------------

Outcome determinism_and_persistence() {
  Checks c;
  const DDIDataset ds = synth_generate({.n_drugs = 60, .n_types = 3, .n_blocks = 3, .f_dim = 10,
                                        .p_in = 0.2, .p_out = 0.02, .seed = 8});
  const Split split = split_edges(ds, {0.6, 0.2, 0.2}, 2);
  TrainConfig cfg;
  cfg.epochs = 15;
  auto log_of = [](const TrainResult& r) {
    std::string s;
    for (const auto& e : r.history) s += to_json(e).dump() + "\n";
    return s;
  };
  const TrainResult a = train(ds, split, cfg);
  const TrainResult b = train(ds, split, cfg);
  c.expect(log_of(a) == log_of(b), "metric logs differ between identical runs");

  fs::create_directories(g_out);
  const fs::path path = g_out / "determinism_checkpoint.bin";
  save_checkpoint(path, make_checkpoint(a.model, a.optimizer, a.best_epoch, a.history));
  const CadglModel restored = model_from_checkpoint(load_checkpoint(path));
  const MessageGraph g = build_message_graph(ds, split.train);
  const auto pairs = labelled_pairs(ds, split.test, 17);
  c.expect(a.model.predict_proba(ds.features(), g, pairs) ==
               restored.predict_proba(ds.features(), g, pairs),
           "predictions changed across save/load");

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  int detected = 0, tried = 0;
  auto corrupt = [&](std::string mutated) {
    ++tried;
    std::ofstream(path, std::ios::binary | std::ios::trunc) << mutated;
    try {
      load_checkpoint(path);
    } catch (const CheckpointError&) {
      ++detected;
    }
  };
  std::string m = bytes;
  m[0] ^= 1;
  corrupt(m);
  m = bytes;
  m[bytes.size() / 3] ^= 0x40;
  corrupt(m);
  m = bytes;
  m[bytes.size() - 1] ^= 0x01;
  corrupt(m);
  corrupt(bytes.substr(0, bytes.size() / 2));
  c.expect(detected == tried, fmt::format("{} of {} corruptions detected", detected, tried));
  fs::remove(path);
  fs::remove(sidecar_path(path));
  return {c.ok, fmt::format("reruns bitwise identical, round-trip exact, {}/{} corruptions "
                            "rejected {}",
                            detected, tried, c.detail())};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--out" && i + 1 < argc) {
      g_out = argv[++i];
    } else {
      try {
        only.insert(std::stoi(arg));
      } catch (const std::exception&) {
        std::cerr << "usage: cadgl_acceptance [--out DIR] [criterion ...]\n";
        return 2;
      }
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient soundness", gradient_soundness},
      {"layer fixtures", layer_fixtures},
      {"probabilistic invariants", probabilistic_invariants},
      {"oracle equivalence", oracle_equivalence},
      {"overfit sanity", overfit_sanity},
      {"desk-scale experiment", desk_experiment},
      {"ablation shape", ablation_shape},
      {"determinism and persistence", determinism_and_persistence},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("[{}] criterion {}: {}: {}\n", o.pass ? "PASS" : "FAIL", id,
                             criteria[k].first, o.detail)
              << std::flush;
  }
  std::cout << (failed ? fmt::format("{} criteria failed\n", failed) : "all criteria passed\n");
  return failed ? EXIT_FAILURE : EXIT_SUCCESS;
}
