#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include <adversim/engine.hpp>

#include "common.hpp"

namespace adversim {
namespace {

using nlohmann::json;
using testing::load_scenario;

TEST(Geometry, WrapAngle) {
  EXPECT_NEAR(wrap_angle(3.0 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.5), 0.5, 0.0);
}

TEST(Geometry, RectCollisionAndDistance) {
  const VehicleDims d;
  const VehicleState a(0, 0, 10, 0);
  EXPECT_TRUE(rect_collision(a, d, VehicleState(5.0, 0, 10, 0), d));
  EXPECT_FALSE(rect_collision(a, d, VehicleState(5.01, 0, 10, 0), d));
  EXPECT_NEAR(rect_distance(a, d, VehicleState(8.0, 0, 10, 0), d), 3.0, 1e-12);
  EXPECT_NEAR(rect_distance(a, d, VehicleState(8.0, 6.0, 10, 0), d), 5.0, 1e-12);
  EXPECT_EQ(rect_distance(a, d, VehicleState(1.0, 0.5, 10, 0.3), d), 0.0);
  EXPECT_TRUE(rect_collision(a, d, VehicleState(0.0, 2.5, 10, kPi / 2), d));
}

TEST(Geometry, CaptureAndSafeSet) {
  Snapshot s;
  s.sv = VehicleState(0, 0, 10, 0);
  s.povs = {VehicleState(7.0, 0, 10, 0), VehicleState(3.0, 4.0, 10, 0)};
  EXPECT_EQ(capture_check(s, 7.0), (std::vector<bool>{false, true}));
  EXPECT_TRUE(in_safe_set(s, 0, 7.0));
  EXPECT_FALSE(in_safe_set(s, 1, 7.0));
  const PovDistance m = min_pov_distance(s);
  EXPECT_EQ(m.pov, 1u);
  EXPECT_NEAR(m.distance, 5.0, 1e-12);
}

TEST(Config, BundledScenariosRoundTrip) {
  for (const auto& entry : std::filesystem::directory_iterator(ADVERSIM_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    const EngineConfig c = parse_config(testing::read_text(entry.path().string()));
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.name, entry.path().stem().string());
    const EngineConfig back = parse_config(serialize_config(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(config_digest(back), config_digest(c));
    EXPECT_EQ(config_digest(c).size(), 16u);
  }
}

TEST(Config, StrictParsing) {
  json doc = json::parse(testing::read_text(testing::scenario_path("cib_c7")));
  EXPECT_NO_THROW(config_from_json(doc));

  json unknown = doc;
  unknown["sim"]["frobnicate"] = 1;
  EXPECT_THROW(config_from_json(unknown), ConfigError);

  json wrong_type = doc;
  wrong_type["sim"]["delta"] = "fast";
  EXPECT_THROW(config_from_json(wrong_type), ConfigError);

  json bad_horizon = doc;
  bad_horizon["sim"]["t_bar"] = 0.25;
  EXPECT_THROW(config_from_json(bad_horizon), ConfigError);

  json crash = doc;
  crash["vehicles"][1]["init"] = {2.0, 5.55, 18.0, 0.0};
  EXPECT_THROW(config_from_json(crash), ConfigError);

  json no_pov = doc;
  no_pov["vehicles"].erase(1);
  EXPECT_THROW(config_from_json(no_pov), ConfigError);

  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sim": {"delta": 1e999}})"), ConfigError);
}

TEST(Config, DigestTracksContent) {
  EngineConfig c = load_scenario("cib_c7");
  const std::string d = config_digest(c);
  c.sim.capture_diameter = 12.0;
  EXPECT_NE(config_digest(c), d);
}

TEST(Assignment, LanesGiveBandsAndRearEndRows) {
  const EngineConfig c = load_scenario("two_lead_povs");
  Snapshot s;
  s.sv = c.sv.init;
  for (const auto& p : c.povs) s.povs.push_back(p.init);
  const auto a = assign_pov_constraints(c, s);
  ASSERT_EQ(a.size(), 2u);
  const auto band0 = pov_center_band(c, 0);
  const auto band1 = pov_center_band(c, 1);
  EXPECT_NEAR(band0.first, 1.0 + 0.5, 1e-12);
  EXPECT_NEAR(band0.second, 7.4 - 1.0 - 0.5, 1e-12);
  EXPECT_LT(band0.second, band1.first);
  for (const auto& pa : a) {
    EXPECT_TRUE(pa.space.state.contains(to_template(s.povs[pa.pov], Direction::Forward)));
  }
}

TEST(Engine, ShortRunIsDeterministic) {
  EngineConfig c = load_scenario("two_lead_povs");
  c.sim.timeout = 3.0;
  Engine a(c);
  Engine b(c);
  a.run();
  b.run();
  EXPECT_EQ(a.log().to_jsonl(), b.log().to_jsonl());
  EXPECT_EQ(a.log().entries.size(), 31u);
  EXPECT_EQ(a.log().termination->name(), "timeout");
}

TEST(Engine, ResetRestoresInitialSnapshot) {
  EngineConfig c = load_scenario("cib_c12");
  c.sim.timeout = 1.0;
  Engine e(c);
  const Snapshot first = e.snapshot();
  e.run();
  e.reset();
  EXPECT_FALSE(e.finished());
  EXPECT_EQ(e.tick(), 0);
  EXPECT_EQ(e.snapshot().sv, first.sv);
  EXPECT_EQ(e.snapshot().povs, first.povs);
  EXPECT_TRUE(e.log().entries.size() <= 1u);
}

TEST(Engine, ExternalStopEndsRun) {
  EngineConfig c = load_scenario("cib_c12");
  Engine e(c);
  e.step();
  e.step();
  e.request_stop();
  std::optional<TerminationReason> t;
  for (int i = 0; i < 3 && !t; ++i) t = e.step();
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(t->kind, TerminationReason::Kind::ExternalStop);
  EXPECT_TRUE(e.finished());
}

TEST(Engine, ExternalDriverFollowsCommands) {
  EngineConfig c = load_scenario("cib_c12");
  c.sv.policy = "external";
  c.sim.timeout = 1.0;
  auto ext = std::make_shared<ExternalPolicy>(c.anchor.bicycle, c.sv.params.box);
  Engine e(c, ext);
  ext->set_command(-1.0, 0.0, 0.0);
  e.step();
  EXPECT_NEAR(e.snapshot().sv.v, c.sv.init.v - 0.1, 1e-9);
}

TEST(RunLog, JsonlRoundTripAndSummary) {
  EngineConfig c = load_scenario("ramp_merge");
  c.sim.timeout = 4.0;
  Engine e(c);
  e.run();
  const RunLog back = RunLog::from_jsonl(e.log().to_jsonl());
  EXPECT_EQ(back.ids, e.log().ids);
  EXPECT_EQ(back.termination, e.log().termination);
  EXPECT_EQ(back.config_digest, config_digest(c));
  ASSERT_EQ(back.entries.size(), e.log().entries.size());
  EXPECT_TRUE(back.entries == e.log().entries);
  const RunSummary recomputed = summarize(back, e.dims(), c.sim.capture_diameter);
  EXPECT_EQ(recomputed.to_json(), e.summary().to_json());
}

TEST(RunLog, CsvHasRowPerVehiclePerTick) {
  EngineConfig c = load_scenario("cib_c7");
  c.sim.timeout = 0.5;
  Engine e(c);
  e.run();
  const std::string csv = e.log().to_csv();
  const auto lines = std::count(csv.begin(), csv.end(), '\n');
  EXPECT_EQ(lines, 1 + 2 * static_cast<long>(e.log().entries.size()));
  EXPECT_EQ(csv.rfind("id,t,x,y,v,phi,a,steer\n", 0), 0u);
}

TEST(RunLog, RejectsMalformedLines) {
  EXPECT_THROW(RunLog::from_jsonl("{\"t\": 0}\n"), Error);
  EXPECT_THROW(RunLog::from_jsonl("not json\n"), Error);
  EXPECT_THROW(RunLog::from_jsonl("{\"t\": 1e999}\n"), Error);
}

TEST(Batch, AggregateCountsCollisions) {
  BatchRun crash;
  crash.scenario = "a";
  crash.summary = RunSummary{};
  crash.summary->collision_time = 9.0;
  crash.summary->min_distance = 0.0;
  BatchRun safe;
  safe.scenario = "b";
  safe.summary = RunSummary{};
  safe.summary->min_distance = 4.0;
  BatchRun failed;
  failed.scenario = "c";
  failed.error = "boom";
  const BatchSummary b = aggregate({crash, safe, failed});
  EXPECT_EQ(b.runs, 3);
  EXPECT_EQ(b.failures, 1);
  EXPECT_EQ(b.collisions, 1);
  EXPECT_DOUBLE_EQ(b.collision_rate, 0.5);
  EXPECT_DOUBLE_EQ(b.mean_min_distance, 2.0);
}

}  // namespace
}  // namespace adversim
