/* Copyright 2026 The gpcnn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gpcnn/eval.hpp"
#include "gpcnn/numerics/ops.hpp"
#include "gpcnn/pipeline/infer.hpp"
#include "gpcnn/pipeline/model.hpp"
#include "gpcnn/pipeline/synth.hpp"
#include "gpcnn/pipeline/train.hpp"

namespace {

using namespace gpcnn;

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist;
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const auto cin = static_cast<std::size_t>(state.range(0));
  Parameter kernel; kernel.name = "k"; kernel.value = random_tensor({3, 3, cin, 32}, rng);
  const Tensor input = random_tensor({48, 64, cin}, rng);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(conv2d(tape.constant(input), tape.param(kernel)).value().data());
  }
}
BENCHMARK(BM_Conv2dForward)->Arg(3)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  Rng rng(2);
  Parameter kernel; kernel.name = "k"; kernel.value = random_tensor({3, 3, 32, 32}, rng);
  kernel.grad = Tensor({3, 3, 32, 32});
  const Tensor input = random_tensor({48, 64, 32}, rng);
  for (auto _ : state) {
    Tape tape;
    const Var x = tape.param(kernel);
    const Var y = conv2d(tape.constant(input), x);
    tape.backward(sum(y));
  }
}
BENCHMARK(BM_Conv2dBackward)->Unit(benchmark::kMillisecond);

struct Fixture {
  RunConfig config;
  Dataset data;
  std::vector<const SynthSample*> samples;

  Fixture() : config(), data(synth_generate(8, config.skeleton(), config.grid(), 0.0, 3)) {
    for (const auto& s : data.samples) samples.push_back(&s);
  }
};

void BM_TrainStep(benchmark::State& state) {
  Fixture f;
  Model model(f.config);
  Rng rng(4);
  for (auto _ : state) {
    model.store().zero_grad();
    Tape tape;
    const BatchLoss bl = batch_loss(tape, model, f.samples, random_guides(model, f.samples, rng));
    tape.backward(bl.total);
    benchmark::DoNotOptimize(bl.report.total);
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Infer(benchmark::State& state) {
  Fixture f;
  Model model(f.config);
  std::vector<const Tensor*> inputs;
  for (const auto* s : f.samples) inputs.push_back(&s->input);
  for (auto _ : state) benchmark::DoNotOptimize(infer_batch(model, inputs).size());
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Infer)->Unit(benchmark::kMillisecond);

void BM_Synth(benchmark::State& state) {
  const RunConfig cfg;
  const Skeleton skel = cfg.skeleton();
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(synth_sample(skel, cfg.grid(), 0.0, 0.05, seed++).input.data());
}
BENCHMARK(BM_Synth)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
