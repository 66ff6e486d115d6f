#include <benchmark/benchmark.h>

#include "nettomo/estimators.hpp"
#include "nettomo/harness.hpp"
#include "nettomo/oed.hpp"
#include "nettomo/policies.hpp"
#include "nettomo/probes.hpp"
#include "nettomo/rng.hpp"
#include "nettomo/topology.hpp"

using namespace nettomo;

namespace {

Eigen::VectorXd spread_mu(std::size_t L) {
  Eigen::VectorXd mu(static_cast<Eigen::Index>(L));
  for (Eigen::Index l = 0; l < mu.size(); ++l) mu[l] = 0.1 + 0.8 * static_cast<double>(l + 1) / static_cast<double>(L + 1);
  return mu;
}

TallyState filled_tally(const ProbeSet& ps, const LinkParams& mu, int per_probe) {
  TallyState tally(ps.mode, ps.size(), ps.link_count());
  RngStream rng(3);
  std::vector<std::uint8_t> out;
  for (std::size_t m = 0; m < ps.size(); ++m) {
    for (int k = 0; k < per_probe; ++k) {
      perform_probe(ps, m, mu, rng, out);
      tally.record(m, out);
    }
  }
  return tally;
}

void BM_StarClosedForm(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto ps = canonical_star_unicast_probes(build_star(L));
  const auto mu = spread_mu(L);
  for (auto _ : state) benchmark::DoNotOptimize(star_a_optimal_allocation(mu, ps.matrix));
}
BENCHMARK(BM_StarClosedForm)->Arg(5)->Arg(39);

void BM_QuantumClosedForm(benchmark::State& state) {
  const auto mu = spread_mu(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quantum_a_optimal_allocation(mu));
}
BENCHMARK(BM_QuantumClosedForm)->Arg(10)->Arg(39);

void BM_FrankWolfe(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto ps = canonical_star_unicast_probes(build_star(L));
  const auto mu = spread_mu(L);
  const CriterionSpec spec{CriterionKind::AOptimal, 1e-6};
  OptimizeOptions opts;
  opts.iterations = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(simplex_optimize(mu, ps, spec, opts));
}
BENCHMARK(BM_FrankWolfe)->Arg(5)->Arg(39);

void BM_FrankWolfeDOptimal(benchmark::State& state) {
  const auto ps = canonical_star_unicast_probes(build_star(5));
  const auto mu = spread_mu(5);
  const CriterionSpec spec{CriterionKind::DOptimal, 1e-6};
  OptimizeOptions opts;
  opts.iterations = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(simplex_optimize(mu, ps, spec, opts));
}
BENCHMARK(BM_FrankWolfeDOptimal);

void BM_StarMle(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto ps = canonical_star_unicast_probes(build_star(L));
  const LinkParams mu(spread_mu(L));
  const auto tally = filled_tally(ps, mu, 200);
  for (auto _ : state) benchmark::DoNotOptimize(link_mle(tally, ps));
}
BENCHMARK(BM_StarMle)->Arg(5)->Arg(39);

void BM_RiMle(benchmark::State& state) {
  const auto ps = ri_multicast_probes(build_star(39));
  const LinkParams mu(spread_mu(39));
  const auto tally = filled_tally(ps, mu, 50);
  for (auto _ : state) benchmark::DoNotOptimize(link_mle(tally, ps));
}
BENCHMARK(BM_RiMle);

void BM_OpalRun(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  auto sc = make_scenario(build_star(L), canonical_star_unicast_probes(build_star(L)), LinkParams(spread_mu(L)),
                          CriterionSpec{});
  PolicyConfig policy;
  policy.kind = PolicyKind::Opal;
  policy.name = "opal";
  RunOptions opts;
  opts.horizon = 10000;
  opts.stride = 10000;
  for (auto _ : state) benchmark::DoNotOptimize(run_once(sc, policy, 0, 0, opts));
  state.SetItemsProcessed(state.iterations() * opts.horizon);
}
BENCHMARK(BM_OpalRun)->Arg(5)->Arg(39)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
