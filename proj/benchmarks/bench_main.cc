// benchmarks/bench_main.cc
//
// Copyright 2026 The cvec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "cvec/clustering.h"
#include "cvec/model.h"
#include "cvec/ops.h"
#include "cvec/scoring.h"
#include "cvec/trainer.h"

namespace cvec {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> d(shape_numel(shape));
  for (double& v : d) v = u(rng);
  return Tensor(std::move(shape), std::move(d), requires_grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_tensor({n, n}, rng);
  const Tensor b = random_tensor({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

ModelConfig bench_config(const std::string& system) {
  ModelConfig::Sizes sizes;
  sizes.attention_dim = 32;
  sizes.heads = 5;
  sizes.tdnn_hidden = 64;
  sizes.hornn_state = 48;
  sizes.hornn_layers = 1;
  sizes.bottleneck_dim = 32;
  return ModelConfig::make(SystemSpec::parse(system), 16, sizes, 20, 1);
}

const char* const kSystems[] = {"tdnn", "hornn", "cvector:consec2"};

void BM_ModelForward(benchmark::State& state) {
  const std::string system = kSystems[state.range(0)];
  state.SetLabel(system);
  const EmbeddingModel model(bench_config(system));
  Rng rng(2);
  const Tensor window = random_tensor({200, 16}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(window).embedding);
}
BENCHMARK(BM_ModelForward)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_ModelTrainStep(benchmark::State& state) {
  const std::string system = kSystems[state.range(0)];
  state.SetLabel(system);
  EmbeddingModel model(bench_config(system));
  Rng rng(3);
  const Tensor window = random_tensor({200, 16}, rng);
  for (auto _ : state) {
    const ModelOutput out = model.forward(window);
    total_loss(model.logits(out.embedding), 0, out.penalties).backward();
  }
}
BENCHMARK(BM_ModelTrainStep)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Cluster(benchmark::State& state) {
  const auto windows = state.range(0);
  Rng rng(4);
  std::normal_distribution<double> noise(0.0, 0.1);
  Eigen::MatrixXd means = Eigen::MatrixXd::Identity(3, 32);
  Eigen::MatrixXd x(windows, 32);
  for (Eigen::Index i = 0; i < windows; ++i) {
    for (Eigen::Index d = 0; d < 32; ++d) x(i, d) = means(i % 3, d) + noise(rng);
  }
  ClusterOptions opts;
  opts.threshold_p = 0.75;
  for (auto _ : state) benchmark::DoNotOptimize(cluster(x, opts).k);
}
BENCHMARK(BM_Cluster)->Arg(60)->Arg(120)->Arg(240)->Unit(benchmark::kMillisecond);

SegmentList random_timeline(Rng& rng, int speakers, const std::string& prefix) {
  std::uniform_int_distribution<int> dur(50, 400), who(0, speakers - 1);
  SegmentList out;
  int t = 0;
  while (t < 60000) {
    const int end = t + dur(rng);
    out.push_back({"rec", t / 100.0, end / 100.0, prefix + std::to_string(who(rng))});
    t = end;
  }
  return out;
}

void BM_Ser(benchmark::State& state) {
  Rng rng(5);
  const SegmentList ref = random_timeline(rng, 4, "r");
  const SegmentList hyp = random_timeline(rng, 5, "h");
  for (auto _ : state) benchmark::DoNotOptimize(ser(ref, hyp).ser_percent);
}
BENCHMARK(BM_Ser)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cvec

BENCHMARK_MAIN();
