#include <benchmark/benchmark.h>

#include "ccae/channel.hpp"
#include "ccae/constraints.hpp"
#include "ccae/features.hpp"
#include "ccae/metrics.hpp"
#include "ccae/nn.hpp"
#include "ccae/scenario.hpp"

using namespace ccae;

namespace {

const std::vector<std::size_t> kHidden{500, 100, 50, 20};

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

void BM_ForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  const Network net = init_network(autoencoder_widths(32, kHidden, 2), Activation::Relu, 1);
  const Matrix x = random_matrix(batch, 32, 2);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(net, x));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256);

void BM_AdamStep(benchmark::State& state) {
  Network net = init_network(autoencoder_widths(32, kHidden, 2), Activation::Relu, 1);
  const auto grads = loss_and_gradients(net, random_matrix(64, 32, 3)).gradients;
  OptimizerConfig cfg;
  OptimizerState opt = OptimizerState::create(net, cfg.kind);
  for (auto _ : state) optimizer_step(net, grads, opt, cfg);
}
BENCHMARK(BM_AdamStep);

void BM_RankTable(benchmark::State& state) {
  const Matrix p = random_matrix(state.range(0), 2, 4);
  for (auto _ : state) benchmark::DoNotOptimize(RankTable(p));
}
BENCHMARK(BM_RankTable)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_KruskalStress(benchmark::State& state) {
  const Matrix a = random_matrix(state.range(0), 2, 5), b = random_matrix(state.range(0), 2, 6);
  for (auto _ : state) benchmark::DoNotOptimize(kruskal_stress(a, b));
}
BENCHMARK(BM_KruskalStress)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_SynthesizeCsi(benchmark::State& state) {
  ScenarioConfig scenario;
  const auto placement = generate_placement(scenario);
  ArrayGeometry array;
  array.position = scenario.bs_position;
  ChannelConfig channel;
  channel.mode = state.range(0) ? ChannelMode::NLoS : ChannelMode::LoS;
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_csi(placement, array, channel));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(placement.size()));
}
BENCHMARK(BM_SynthesizeCsi)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  Rng rng(7);
  CsiMatrix csi(2048, 32);
  for (Eigen::Index r = 0; r < csi.rows(); ++r)
    for (Eigen::Index c = 0; c < csi.cols(); ++c) csi(r, c) = {rng.normal(), rng.normal()};
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(csi));
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMillisecond);

void BM_ConstraintBatch(benchmark::State& state) {
  ScenarioConfig scenario;
  const auto placement = generate_placement(scenario);
  ConstraintSet set = build_anchor_constraints(placement.anchor_indices, placement.positions);
  set.append(build_trajectory_constraints(placement.trajectory_indices, 5.0, 3));
  Rng rng(8);
  const Matrix all = random_matrix(static_cast<Eigen::Index>(placement.size()), 2, 9);
  KindWeights lambdas;
  for (auto _ : state) {
    const auto batch = sample_constraints(set, 64, rng);
    const auto refs = referenced_indices(set, batch);
    Matrix y(static_cast<Eigen::Index>(refs.size()), 2);
    for (std::size_t r = 0; r < refs.size(); ++r) y.row(static_cast<Eigen::Index>(r)) = all.row(static_cast<Eigen::Index>(refs[r]));
    benchmark::DoNotOptimize(accumulate_bottleneck_gradients(set, batch, refs, y, lambdas));
  }
}
BENCHMARK(BM_ConstraintBatch);

}  // namespace
BENCHMARK_MAIN();
