#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "gami/boost.hpp"
#include "gami/filter.hpp"
#include "gami/gami.hpp"
#include "gami/purify.hpp"
#include "gami/simgen.hpp"

using namespace gami;

namespace {

// n rows, p standard normal features, additive signal in the first five plus one product.
struct Fixture {
  Dataset data;
  BinMap bins;
  std::vector<std::size_t> train, validation;
  std::unique_ptr<TrainingFrame> frame;
  std::vector<double> scores, y_train;
  NewtonState state;

  Fixture(std::size_t n, std::size_t p) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    std::vector<double> y(n);
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& c : cols) c[i] = normal(rng);
      y[i] = cols[0][i] + 0.5 * cols[1][i] * cols[1][i] + std::sin(cols[2][i]) + cols[3][i] * cols[4][i] +
             0.5 * normal(rng);
    }
    data = split(Dataset(std::move(cols), names, std::move(y)), {0.5, 0.25, 0.25}, 1);
    bins = BinMap::build(data, kDefaultMaxBins);
    train = data.rows_with(SplitTag::train);
    validation = data.rows_with(SplitTag::validation);
    frame = std::make_unique<TrainingFrame>(data, bins, train, kDefaultKnots);
    for (auto r : train) y_train.push_back(data.response()[r]);
    scores.assign(data.rows(), initial_score(LossSpec::squared(), y_train));
    std::vector<double> g(train.size(), scores.front());
    state = derivatives(LossSpec::squared(), y_train, g);
  }
};

Fixture& wide() {
  static Fixture f(200000, 50);  // 100K training rows
  return f;
}

Fixture& narrow() {
  static Fixture f(100000, 10);
  return f;
}

const TreeParams kParams{2, 250, 1.0};

void BM_MainTree(benchmark::State& st) {
  auto& f = wide();
  for (auto _ : st) benchmark::DoNotOptimize(fit_candidate(*f.frame, {0, 0}, kParams, f.state));
}
BENCHMARK(BM_MainTree)->Unit(benchmark::kMillisecond);

void BM_InteractionTree(benchmark::State& st) {
  auto& f = wide();
  for (auto _ : st) benchmark::DoNotOptimize(fit_candidate(*f.frame, {3, 4}, kParams, f.state));
}
BENCHMARK(BM_InteractionTree)->Unit(benchmark::kMillisecond);

// One main-stage iteration: derivatives, 50 candidate trees, selection, score update.
void BM_MainStageIteration(benchmark::State& st) {
  auto& f = wide();
  const BoostContext ctx{f.data, *f.frame, f.validation, LossSpec::squared(), kParams,
                         static_cast<std::size_t>(st.range(0))};
  for (auto _ : st) {
    auto scores = f.scores;
    benchmark::DoNotOptimize(fit_main(ctx, scores, StageConfig{0.2, 1, 10}));
  }
}
BENCHMARK(BM_MainStageIteration)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_FilterInt(benchmark::State& st) {
  auto& f = narrow();
  FilterOptions opt;
  opt.q = 10;
  opt.tree = kParams;
  for (auto _ : st) benchmark::DoNotOptimize(filter_int(*f.frame, f.state, opt));
}
BENCHMARK(BM_FilterInt)->Unit(benchmark::kMillisecond);

void BM_FastFilter(benchmark::State& st) {
  auto& f = narrow();
  FilterOptions opt;
  opt.q = 10;
  for (auto _ : st) benchmark::DoNotOptimize(fast_filter(f.data, f.train, LossSpec::squared(), f.scores, opt));
}
BENCHMARK(BM_FastFilter)->Unit(benchmark::kMillisecond);

void BM_FitAndPurify(benchmark::State& st) {
  sim::SimConfig sc;
  sc.model_id = 2;
  sc.n = 20000;
  sc.seed = 1;
  const auto data = split(sim::generate(sc).data, {0.5, 0.25, 0.25}, 1);
  const auto bins = BinMap::build(data, kDefaultMaxBins);
  GamiConfig cfg;
  cfg.purify = false;
  const auto model = fit(data, bins, cfg);
  const auto train = data.rows_with(SplitTag::train);
  for (auto _ : st) benchmark::DoNotOptimize(purify(model, data, train, kDefaultKnots));
}
BENCHMARK(BM_FitAndPurify)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
