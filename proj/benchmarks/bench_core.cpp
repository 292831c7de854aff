#include <benchmark/benchmark.h>

#include "lmpsh/aalen_johansen.hpp"
#include "lmpsh/censoring.hpp"
#include "lmpsh/fine_gray.hpp"
#include "lmpsh/landmark.hpp"
#include "lmpsh/metrics.hpp"
#include "lmpsh/simulate.hpp"
#include "lmpsh/supermodel.hpp"

using namespace lmpsh;

namespace {

SurvivalDataset data(std::size_t n) {
  Setting2Params p;
  p.censoring.upper = 10.0;
  return sim_setting2(n, p, 42);
}

CountingProcessTable table(std::size_t n) {
  const SurvivalDataset ds = data(n);
  return to_counting_process(ds, km_censoring(ds)).table;
}

void BM_Simulate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Setting2Params p;
  p.censoring.upper = 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(sim_setting2(n, p, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(10000);

void BM_PartialLoglik(benchmark::State& state) {
  const CountingProcessTable cp = table(static_cast<std::size_t>(state.range(0)));
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(partial_loglik(cp, beta));
  state.counters["rows"] = static_cast<double>(cp.rows());
}
BENCHMARK(BM_PartialLoglik)->Arg(1000)->Arg(10000);

void BM_FitFineGray(benchmark::State& state) {
  const CountingProcessTable cp = table(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_fine_gray(cp));
}
BENCHMARK(BM_FitFineGray)->Arg(1000)->Arg(10000);

void BM_LandmarkPsh(benchmark::State& state) {
  const SurvivalDataset ds = data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_landmark_psh(ds, {1.0, 2.0}));
}
BENCHMARK(BM_LandmarkPsh)->Arg(1000)->Arg(10000);

void BM_BuildStacked(benchmark::State& state) {
  const SurvivalDataset ds = data(1000);
  const auto grid = make_grid(0.0, 0.1, 4.0);
  StackOptions so;
  so.jobs = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_stacked(ds, grid, 2.0, BasisSpec::quadratic(), so));
}
BENCHMARK(BM_BuildStacked)->Arg(1)->Arg(4);

void BM_FitSupermodel(benchmark::State& state) {
  const StackedDataset st = build_stacked(data(1000), make_grid(0.0, 0.1, 4.0), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(fit_supermodel(st));
  state.counters["rows"] = static_cast<double>(st.table.rows());
}
BENCHMARK(BM_FitSupermodel)->Unit(benchmark::kMillisecond);

void BM_Pseudovalues(benchmark::State& state) {
  const SurvivalDataset ds = data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pseudovalues(ds, 1.0, 2.0));
}
BENCHMARK(BM_Pseudovalues)->Arg(1000)->Arg(5000);

void BM_Auc(benchmark::State& state) {
  const SurvivalDataset ds = data(static_cast<std::size_t>(state.range(0)));
  const auto model = train(ds, ModelSpec{}, std::vector<double>{1.0}, 2.0);
  const PredictionSet p = predict_at(*model, ds, 1.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(auc(ds, p));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
