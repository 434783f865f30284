#include "aimc/analog_array.hpp"
#include "aimc/optimizers.hpp"
#include "aimc/problems.hpp"
#include "aimc/pulse.hpp"

#include <benchmark/benchmark.h>

using namespace aimc;

static void BM_PulseTrain(benchmark::State& state) {
  const auto m = ResponseModel::generic_linear(3.5, 0.1);
  PulseConfig c;
  c.delta_w_min = 1e-4;
  c.max_bl = static_cast<int>(state.range(0));
  c.sigma_c = 0.3;
  Rng rng(1);
  double w = 0.0;
  for (auto _ : state) {
    w = pulse_train_update(m, c, w, (w > 0 ? -1.0 : 1.0), rng);
    benchmark::DoNotOptimize(w);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PulseTrain)->Arg(8)->Arg(32);

static void BM_ArrayUpdate(benchmark::State& state) {
  const auto n = state.range(0);
  const auto backend = state.range(1) ? UpdateBackend::PulseTrain : UpdateBackend::ClosedForm;
  PulseConfig c;
  c.delta_w_min = 1e-3;
  AnalogArray a(n, n, ResponseModel::power(1.0, 0.5), c, backend);
  Rng rng(2);
  const Matrix g = Matrix::Random(n, n);
  for (auto _ : state) {
    a.apply_update(g, 1e-2, rng);
    a.apply_update(-g, 1e-2, rng);
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n);
}
BENCHMARK(BM_ArrayUpdate)->Args({64, 0})->Args({64, 1})->Args({256, 0});

static void BM_ResidualStep(benchmark::State& state) {
  const auto n = state.range(0);
  PulseConfig c;
  ResidualConfig rc;
  rc.variant = ResidualVariant::RLv2;
  const auto m = ResponseModel::power(1.0, 0.5);
  ResidualLearning rl(AnalogArray(n, n, m, c), AnalogArray(n, n, m, c, UpdateBackend::ClosedForm, 0.06), rc);
  Rng rng(3);
  const Matrix g = Matrix::Random(n, n);
  for (auto _ : state) {
    rl.prepare(rng);
    rl.apply_gradient(g, rng);
  }
}
BENCHMARK(BM_ResidualStep)->Arg(64);

static void BM_LeastSquaresGradient(benchmark::State& state) {
  const auto p = make_least_squares(50, 100, 1.0, 0.5, 4, {NoiseMode::Subsample, 0.0, static_cast<int>(state.range(0))});
  Rng rng(4);
  const Matrix w = Matrix::Random(1, 50);
  for (auto _ : state) benchmark::DoNotOptimize(p.stochastic_gradient(w, rng));
}
BENCHMARK(BM_LeastSquaresGradient)->Arg(2)->Arg(100);

static void BM_FcnForwardBackward(benchmark::State& state) {
  FcnClassifier net;
  Rng rng(5);
  const auto params = net.random_parameters(rng);
  const auto batch = state.range(0);
  const Matrix x = Matrix::Random(784, batch).cwiseAbs();
  std::vector<int> y(static_cast<std::size_t>(batch));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 10);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_backward(params, x, y));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_FcnForwardBackward)->Arg(10)->Arg(100);

BENCHMARK_MAIN();
