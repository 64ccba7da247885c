#include <fstream>
#include <sstream>

#include <benchmark/benchmark.h>

#include <adversim/engine.hpp>

namespace {

adversim::EngineConfig load(const std::string& name) {
  std::ifstream in(std::string(ADVERSIM_SCENARIO_DIR) + "/" + name + ".json");
  std::stringstream ss;
  ss << in.rdbuf();
  return adversim::parse_config(ss.str());
}

adversim::Encounter close_encounter(double gap) {
  adversim::Encounter enc;
  const adversim::ActionBounds box;
  const adversim::AdmissibleSpace space(adversim::default_action_polytope(box),
                                        adversim::lane_state_polytope(3, 3.7, {5.0, 45.0}), box);
  enc.sv = adversim::VehicleState(0.0, 5.55, 18.0, 0.0);
  enc.pov = adversim::VehicleState(gap, 5.55, 18.0, 0.0);
  enc.sv_space = space;
  enc.pov_space = space;
  enc.sv_mats = adversim::build_matrices(18.0, 0.1);
  enc.pov_mats = adversim::build_matrices(18.0, 0.1);
  return enc;
}

void BM_Minimax(benchmark::State& state) {
  const auto enc = close_encounter(15.0);
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(adversim::best_response_minimax(enc, steps));
}
BENCHMARK(BM_Minimax)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_CaptureSearch(benchmark::State& state) {
  const auto enc = close_encounter(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(adversim::search_capture(enc, 7.0, 2.0));
}
BENCHMARK(BM_CaptureSearch)->Arg(12)->Arg(30)->Unit(benchmark::kMillisecond);

// One planning tick from a scenario's opening snapshot.
void BM_PlanTick(benchmark::State& state, const std::string& name) {
  const auto c = load(name);
  adversim::Snapshot s;
  s.sv = c.sv.init;
  for (const auto& p : c.povs) s.povs.push_back(p.init);
  const auto assignments = adversim::assign_pov_constraints(c, s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(adversim::plan_tick(c, s, {}, assignments));
  }
}
BENCHMARK_CAPTURE(BM_PlanTick, cib_c7, std::string("cib_c7"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PlanTick, two_lead_povs, std::string("two_lead_povs"))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PlanTick, three_pov_oncoming, std::string("three_pov_oncoming"))
    ->Unit(benchmark::kMillisecond);

void BM_EngineTick(benchmark::State& state) {
  auto c = load("three_pov_oncoming");
  adversim::Engine e(c);
  for (auto _ : state) {
    if (e.step()) {
      state.PauseTiming();
      e.reset();
      state.ResumeTiming();
    }
  }
}
BENCHMARK(BM_EngineTick)->Unit(benchmark::kMillisecond);

}  // namespace
