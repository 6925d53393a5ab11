// OpenMP kernels against their serial reference loops. Arg 0 = Serial,
// 1 = Parallel.
#include <benchmark/benchmark.h>

#include "advfilt/attacks.hpp"
#include "advfilt/linkchain.hpp"
#include "advfilt/modgen.hpp"
#include "advfilt/netcls.hpp"

using namespace advfilt;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

const modgen::Dataset& dataset() {
  static const auto data = modgen::make_dataset(4, 100, 128, 3, Exec::Serial);
  return data;
}

const netcls::Classifier& classifier() {
  static const netcls::Classifier c(4, 128, 5);
  return c;
}

void BM_make_dataset(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(modgen::make_dataset(4, 100, 128, 3, exec_of(state)));
}

void BM_train_epoch(benchmark::State& state) {
  netcls::TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(netcls::train(dataset(), cfg, exec_of(state)));
}

void BM_batch_tap_gradient(benchmark::State& state) {
  const auto& data = dataset();
  std::vector<Signal> signals;
  std::vector<std::uint32_t> labels;
  for (std::size_t i : data.train) {
    signals.push_back(data.examples[i].signal);
    labels.push_back(data.examples[i].label);
  }
  const auto f = FilterTaps::centered_unit(5);
  std::vector<Complex> grad;
  for (auto _ : state)
    benchmark::DoNotOptimize(attacks::batch_tap_gradient(classifier(), signals, labels, f, grad, exec_of(state)));
}

void BM_run_sweep(benchmark::State& state) {
  linkchain::SweepGrid grid;
  grid.tx_power_db = {10.0, 15.0};
  grid.trials = 100;
  const std::vector<linkchain::SweepAttack> arms{{"none", linkchain::Method::None, {}, {}},
                                                 {"fgsm", linkchain::Method::Fgsm, {}, {}},
                                                 {"fgfm", linkchain::Method::Fgfm, {}, {}}};
  for (auto _ : state)
    benchmark::DoNotOptimize(linkchain::run_sweep(classifier(), classifier(), grid, arms, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_make_dataset)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_train_epoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_tap_gradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_run_sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
