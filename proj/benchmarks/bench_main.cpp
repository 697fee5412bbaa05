#include <benchmark/benchmark.h>

#include <random>

#include "supertc/autograd.hpp"
#include "supertc/dataset.hpp"
#include "supertc/trainer.hpp"

namespace {

using namespace supertc;

NdArray random_array(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  NdArray a(std::move(shape));
  for (double& v : a.data()) v = dist(rng);
  return a;
}

std::vector<LabeledRecord> random_records(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> z(1, 94);
  std::uniform_real_distribution<double> amount(0.1, 5.0), tc(0.0, 40.0);
  std::vector<LabeledRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string formula;
    for (int k = 0; k < 4; ++k) {
      formula += Element::from_atomic_number(z(rng)).symbol();
      formula += std::to_string(amount(rng)).substr(0, 4);
    }
    out.push_back(LabeledRecord::make(formula, i % 4 == 0 ? 0.0 : tc(rng)));
  }
  return out;
}

void BM_AffineForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const NdArray x = random_array({n, 120}, 1), w = random_array({120, 256}, 2), b = random_array({256}, 3);
  const NdArray target({n, 256});
  for (auto _ : state) {
    Tape t;
    const Var y = affine(t, t.constant(x), t.variable(w), t.variable(b));
    t.backward(mse_loss(t, y, t.constant(target)));
    benchmark::DoNotOptimize(t.grad(y).data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_AffineForwardBackward)->Arg(256)->Arg(4096);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const NdArray x = random_array({n, 16, 10, 12}, 4), k = random_array({32, 16, 3, 3}, 5);
  const NdArray b = random_array({32}, 6), target({n, 32, 10, 12});
  for (auto _ : state) {
    Tape t;
    const Var y = conv2d(t, t.constant(x), t.variable(k), t.variable(b), {1, 1});
    t.backward(mse_loss(t, y, t.constant(target)));
    benchmark::DoNotOptimize(t.grad(y).data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(32)->Arg(256);

void BM_EncodeBatch(benchmark::State& state) {
  const auto records = random_records(4096, 7);
  std::vector<std::size_t> idx(records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const Model fcnn = Model::build(ModelConfig::defaults(ModelVariant::kFcnn));
  for (auto _ : state) benchmark::DoNotOptimize(fcnn.encode_batch(records, idx));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_EncodeBatch);

void BM_TrainEpoch(benchmark::State& state) {
  const auto variant = state.range(0) == 0 ? ModelVariant::kFcnn : ModelVariant::kCnn;
  const auto records = random_records(2048, 8);
  TrainSchedule s;
  s.stage1_epochs = 1;
  s.stage2_epochs = 1;
  s.decay_epoch = 0;
  Model model = Model::build(ModelConfig::defaults(variant));
  for (auto _ : state) benchmark::DoNotOptimize(train_stage1(model, records, {}, s));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
  state.SetLabel(std::string(model_variant_name(variant)));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
