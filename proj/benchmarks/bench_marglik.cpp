#include <benchmark/benchmark.h>

#include "bvs/datagen.hpp"
#include "bvs/marglik.hpp"
#include "bvs/proposal.hpp"

namespace {

struct Fixture {
  bvs::Simulation sim;
  bvs::PriorConfig prior;
  std::vector<bvs::Theta> thetas;
};

Fixture make_fixture(std::size_t n) {
  bvs::SimSpec spec;
  spec.n = n;
  spec.p = 50;
  spec.seed = 9;
  Fixture f{bvs::simulate(spec), bvs::PriorConfig::uniform(spec.q, spec.p, 0.5, 0.5), {}};
  const auto params = bvs::prior_proposal(f.prior, f.sim.data.group_map(), 1e-6);
  bvs::Rng rng = bvs::make_stream(9, 0, 0);
  for (int i = 0; i < 256; ++i) f.thetas.push_back(bvs::sample_proposal(params, rng).theta);
  return f;
}

void BM_AlaEvaluation(benchmark::State& state) {
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)));
  const auto cache = bvs::precompute_ala(f.sim.data, f.prior);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bvs::ala_log_marginal(f.thetas[i++ % f.thetas.size()], cache));
  }
}
BENCHMARK(BM_AlaEvaluation)->Arg(500)->Arg(5000)->Arg(50000);

void BM_LaEvaluation(benchmark::State& state) {
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bvs::la_log_marginal(f.thetas[i++ % f.thetas.size()], f.sim.data, f.prior));
  }
}
BENCHMARK(BM_LaEvaluation)->Arg(500)->Arg(5000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_AlaPrecompute(benchmark::State& state) {
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bvs::precompute_ala(f.sim.data, f.prior));
}
BENCHMARK(BM_AlaPrecompute)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
