#include <random>

#include <benchmark/benchmark.h>

#include "cadgl/encoder.hpp"
#include "cadgl/ops.hpp"
#include "cadgl/synth.hpp"
#include "cadgl/trainer.hpp"

using namespace cadgl;

namespace {

Tensor uniform(std::size_t r, std::size_t c, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(r, c);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

const DDIDataset& desk_dataset() {
  static const DDIDataset ds = synth_generate(SynthParams{});
  return ds;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Var a(uniform(n, n, rng)), b(uniform(n, n, rng));
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b).value().data().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

void BM_SegmentSoftmax(benchmark::State& state) {
  const auto segments = static_cast<std::size_t>(state.range(0));
  const std::size_t width = 8;
  std::vector<std::size_t> bounds;
  for (std::size_t s = 0; s <= segments; ++s) bounds.push_back(s * width);
  const Segments seg = Segments::contiguous(bounds);
  Rng rng(2);
  const Var scores(uniform(segments * width, 1, rng));
  for (auto _ : state) benchmark::DoNotOptimize(segment_softmax(scores, seg).value().data().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(segments * width));
}
BENCHMARK(BM_SegmentSoftmax)->Arg(200)->Arg(5000);

void BM_EncodeForwardBackward(benchmark::State& state) {
  const DDIDataset& ds = desk_dataset();
  std::vector<std::size_t> all(ds.edges().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const MessageGraph graph = build_message_graph(ds, all);
  Rng rng(3);
  ParameterStore store;
  EncoderConfig cfg;
  cfg.d_in = ds.features().cols();
  const EncoderParams params = init_encoder(store, cfg, rng);
  const Var X(ds.features());
  for (auto _ : state) {
    store.zero_grads();
    const EncoderOutput out = encode(X, graph, params);
    backward(sum(out.x_o));
  }
}
BENCHMARK(BM_EncodeForwardBackward)->Unit(benchmark::kMillisecond);

void BM_TrainOneEpoch(benchmark::State& state) {
  const DDIDataset& ds = desk_dataset();
  const Split split = split_edges(ds, {0.6, 0.2, 0.2}, 0);
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(ds, split, cfg).history.size());
}
BENCHMARK(BM_TrainOneEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
