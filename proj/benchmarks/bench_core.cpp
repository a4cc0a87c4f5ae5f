#include <benchmark/benchmark.h>

#include "controlgan/losses.hpp"
#include "controlgan/trainer.hpp"

using namespace controlgan;

namespace {

Tensor random_tensor(Rng& rng, const Shape& s) {
  std::vector<real_t> v(static_cast<size_t>(s.numel()));
  for (auto& e : v) e = rng.uniform_open(-1, 1);
  return Tensor(s, std::move(v));
}

void BM_matmul(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(1);
  const Tensor a = random_tensor(rng, Shape{n, n});
  const Tensor b = random_tensor(rng, Shape{n, n});
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b).values().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(32)->Arg(128);

void BM_conv2d_forward(benchmark::State& state) {
  Rng rng(2);
  const Tensor x = random_tensor(rng, Shape{8, 16, 32, 32});
  const Tensor k = random_tensor(rng, Shape{16, 16, 5, 5});
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d(x, k, 2, Padding::same).values().data());
  }
}
BENCHMARK(BM_conv2d_forward);

void BM_generator_backward(benchmark::State& state) {
  ModelSpec g = ModelSpec::for_role(Role::generator, DataKind::vector);
  g.spatial_scale = 2;
  ParamSet params = build_model(g, 3);
  Rng rng(4);
  const Tensor z = random_tensor(rng, Shape{64, g.z_dim});
  const Tensor l = random_tensor(rng, Shape{64, g.label_dim});
  const auto only = params.tensors();
  for (auto _ : state) {
    Tape tape;
    Tape::Scope scope(tape);
    const Tensor out = generator_forward(g, params, z, l);
    params.zero_grads();
    backward(mean_all(mul(out, out)), only);
    benchmark::DoNotOptimize(params.at("fc.w").grad().data());
  }
}
BENCHMARK(BM_generator_backward);

void BM_training_iteration(benchmark::State& state) {
  SyntheticSpec spec = SyntheticSpec::axes(2, 2);
  spec.samples_per_combo = 64;
  const LabeledDataset data = make_synthetic(spec);
  TrainConfig cfg;
  cfg.batch_size = 64;
  ModelSpec sg = ModelSpec::for_role(Role::generator, DataKind::vector);
  ModelSpec sd = ModelSpec::for_role(Role::discriminator, DataKind::vector);
  ModelSpec sc = ModelSpec::for_role(Role::classifier, DataKind::vector);
  for (ModelSpec* m : {&sg, &sd, &sc}) m->spatial_scale = 2;
  const ParamSet theta_c = pretrain_classifier(cfg, sc, data);
  TrainState st = init_train_state(cfg, sg, sd, sc, &theta_c);
  BatchStream stream(data, cfg.batch_size, 1);
  for (auto _ : state) {
    const auto batch = stream.next();
    discriminator_step(st, cfg, batch.samples, batch.labels);
    const auto gl = generator_step(st, cfg, batch.labels);
    benchmark::DoNotOptimize(gl.adv_part);
  }
}
BENCHMARK(BM_training_iteration);

}  // namespace

BENCHMARK_MAIN();
