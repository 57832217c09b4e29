#include <benchmark/benchmark.h>

#include "bvs/datagen.hpp"
#include "bvs/proposal.hpp"
#include "bvs/smc.hpp"

namespace {

std::vector<bvs::Theta> prior_sample(std::size_t count, std::size_t p, std::size_t q) {
  const auto prior = bvs::PriorConfig::uniform(q, p, 0.5, 0.5);
  const auto params = bvs::prior_proposal(prior, bvs::contiguous_groups(p, q), 1e-6);
  bvs::Rng rng = bvs::make_stream(2, 0, 0);
  std::vector<bvs::Theta> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(bvs::sample_proposal(params, rng).theta);
  return out;
}

void BM_FitProposal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto thetas = prior_sample(n, 50, 5);
  const std::vector<double> w(n, 1.0 / static_cast<double>(n));
  const std::vector<double> fallback(50, 0.5);
  const auto gm = bvs::contiguous_groups(50, 5);
  for (auto _ : state) benchmark::DoNotOptimize(bvs::fit_proposal({thetas, w}, gm, fallback));
}
BENCHMARK(BM_FitProposal)->Arg(2500)->Arg(25000)->Unit(benchmark::kMillisecond);

void BM_SampleProposal(benchmark::State& state) {
  const auto prior = bvs::PriorConfig::uniform(5, 50, 0.5, 0.5);
  const auto params = bvs::prior_proposal(prior, bvs::contiguous_groups(50, 5), 1e-6);
  bvs::Rng rng = bvs::make_stream(3, 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(bvs::sample_proposal(params, rng));
}
BENCHMARK(BM_SampleProposal);

void BM_AlaRun(benchmark::State& state) {
  bvs::SimSpec spec;
  spec.n = 2500;
  spec.p = 50;
  const auto sim = bvs::simulate(spec);
  const auto prior = bvs::PriorConfig::uniform(spec.q, spec.p, 0.5, 0.5);
  bvs::SmcConfig config;
  config.n_particles = 5000;
  config.ancestors = 50;
  config.chain_length = 100;
  for (auto _ : state) benchmark::DoNotOptimize(bvs::run(sim.data, prior, config));
}
BENCHMARK(BM_AlaRun)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
