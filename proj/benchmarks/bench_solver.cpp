#include <benchmark/benchmark.h>

#include <random>

#include "tpik/chain_config.hpp"
#include "tpik/mission.hpp"
#include "verify/oracle.hpp"

using namespace tpik;

namespace {

Vector home_q() {
  Vector q(7);
  q << 0.0, 3.6, 0.0, 1.9, 0.0, 2.2, 0.0;
  return q;
}

void BM_ForwardKinematics(benchmark::State& state) {
  const KinematicChain chain = reference_chain();
  const Vector q = home_q();
  for (auto _ : state) benchmark::DoNotOptimize(forward_kinematics(chain, q));
}
BENCHMARK(BM_ForwardKinematics);

void BM_GeometricJacobian(benchmark::State& state) {
  const KinematicChain chain = reference_chain();
  const Vector q = home_q();
  const Eigen::Vector3d p = forward_kinematics(chain, q).translation();
  for (auto _ : state) benchmark::DoNotOptimize(geometric_jacobian(chain, q, p));
}
BENCHMARK(BM_GeometricJacobian);

void BM_NullSpaceProjector(benchmark::State& state) {
  const KinematicChain chain = reference_chain();
  const Matrix j = geometric_jacobian(chain, home_q(), Eigen::Vector3d::Zero());
  for (auto _ : state) benchmark::DoNotOptimize(null_space_projector(j));
}
BENCHMARK(BM_NullSpaceProjector);

/// solve_step on random scenarios with a fixed number of active set-based tasks.
void BM_SolveStep(benchmark::State& state) {
  std::mt19937_64 rng(12);
  const auto active = static_cast<std::size_t>(state.range(0));
  std::vector<verify::Scenario> scenarios;
  for (int i = 0; i < 32; ++i) scenarios.push_back(verify::random_scenario(rng, active));
  std::size_t k = 0;
  for (auto _ : state) {
    const auto& s = scenarios[k++ % scenarios.size()];
    benchmark::DoNotOptimize(solve_step(s.hierarchy, s.evaluations));
  }
}
BENCHMARK(BM_SolveStep)->DenseRange(0, 3);

void BM_BruteForceOracle(benchmark::State& state) {
  std::mt19937_64 rng(12);
  const verify::Scenario s = verify::random_scenario(rng, 3);
  for (auto _ : state) benchmark::DoNotOptimize(verify::brute_force_solve(s.hierarchy, s.evaluations));
}
BENCHMARK(BM_BruteForceOracle);

/// One full control tick of the drink mission: perceive, evaluate, solve, step, log.
void BM_DrinkMissionTick(benchmark::State& state) {
  const KinematicChain chain = reference_chain();
  const WorldState world = default_world();
  std::mt19937_64 rng(0);
  const MissionScript script = compile_mission({"water", Action::drink, SubAction::none}, world,
                                               perceive(world, {}, rng), {}, 7);
  auto runner = std::make_unique<MissionRunner>(chain, script, world);
  for (auto _ : state) {
    if (runner->finished()) {
      state.PauseTiming();
      runner = std::make_unique<MissionRunner>(chain, script, world);
      state.ResumeTiming();
    }
    runner->tick();
  }
}
BENCHMARK(BM_DrinkMissionTick);

void BM_MoveMission(benchmark::State& state) {
  const KinematicChain chain = reference_chain();
  const WorldState world = default_world();
  std::mt19937_64 rng(0);
  const MissionScript script = compile_mission({"water", Action::move, SubAction::right}, world,
                                               perceive(world, {}, rng), {}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(run_mission(chain, script, world));
}
BENCHMARK(BM_MoveMission)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
