// Microbenchmarks for the training hot path at the default model size:
// 32-dim inputs, 2 transformer blocks, prompt length 20, batches of 10.

#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "f2ocl/contrastive.hpp"
#include "f2ocl/encoder.hpp"
#include "f2ocl/inference.hpp"
#include "f2ocl/rng.hpp"
#include "f2ocl/trainer.hpp"

namespace {

using namespace f2ocl;

EncoderConfig default_encoder() {
  EncoderConfig cfg;  // library defaults match the paper-scale model
  cfg.seed = 7;
  return cfg;
}

std::vector<double> random_input(CounterRng& rng, std::size_t d) {
  std::vector<double> x(d);
  for (double& v : x) v = rng.next_gaussian();
  return x;
}

void bm_encoder_forward(benchmark::State& state) {
  const EncoderState enc = build_encoder(default_encoder());
  CounterRng rng(1, 0);
  const std::vector<double> x = random_input(rng, 32);
  Prompt prompt(20, 32);
  for (double& v : prompt.tokens.data) v = rng.next_gaussian(0.02);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode_with_prompt(enc, x, prompt));
  }
}
BENCHMARK(bm_encoder_forward);

void bm_encoder_backward(benchmark::State& state) {
  const EncoderState enc = build_encoder(default_encoder());
  CounterRng rng(2, 0);
  const std::vector<double> x = random_input(rng, 32);
  Prompt prompt(20, 32);
  for (double& v : prompt.tokens.data) v = rng.next_gaussian(0.02);
  const std::vector<double> upstream = random_input(rng, 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_wrt_prompt(enc, x, prompt, upstream));
  }
}
BENCHMARK(bm_encoder_backward);

void bm_batch_loss_and_grads(benchmark::State& state) {
  CounterRng rng(3, 0);
  std::vector<AnchorView> batch;
  PrototypeStore protos;
  std::map<int, LossWeights> weights;
  for (int c = 0; c < 3; ++c) {
    create_prototype(protos, c, random_input(rng, 32));
    weights[c] = class_weights(40, 4);
  }
  for (std::size_t i = 0; i < 10; ++i)
    batch.push_back({static_cast<int>(i % 3), random_input(rng, 32)});
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_loss_and_embedding_grads(batch, protos, weights, 0.2));
  }
}
BENCHMARK(bm_batch_loss_and_grads);

void bm_process_batch(benchmark::State& state) {
  EncoderConfig ecfg = default_encoder();
  TrainConfig tcfg;
  tcfg.seed = 7;
  const EncoderState enc = build_encoder(ecfg);
  CounterRng rng(4, 0);
  Batch batch;
  for (std::size_t i = 0; i < 10; ++i)
    batch.samples.push_back({static_cast<int>(i % 2), random_input(rng, 32)});
  for (auto _ : state) {
    state.PauseTiming();
    ModelState model = make_model_state(ecfg, tcfg);
    state.ResumeTiming();
    benchmark::DoNotOptimize(process_batch(model, enc, batch, 0));
  }
}
BENCHMARK(bm_process_batch);

void bm_classify(benchmark::State& state) {
  EncoderConfig ecfg = default_encoder();
  TrainConfig tcfg;
  tcfg.seed = 7;
  const EncoderState enc = build_encoder(ecfg);
  CounterRng rng(5, 0);
  ModelState model = make_model_state(ecfg, tcfg);
  Batch batch;
  for (std::size_t i = 0; i < 10; ++i)
    batch.samples.push_back({static_cast<int>(i % 5), random_input(rng, 32)});
  process_batch(model, enc, batch, 0);
  const std::vector<double> x = random_input(rng, 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        classify(enc, model.pool, model.prototypes, x, 1, KeyMode::retrieved));
  }
}
BENCHMARK(bm_classify);

}  // namespace

BENCHMARK_MAIN();
