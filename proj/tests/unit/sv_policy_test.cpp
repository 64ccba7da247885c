#include <cmath>

#include <gtest/gtest.h>

#include <adversim/sv_policy.hpp>

namespace adversim {
namespace {

double idm_reference(double v, double gap, double dv, const IdmParams& p) {
  const double dyn = v * p.t_headway + v * dv / (2.0 * std::sqrt(p.a_max * p.b_comf));
  const double s_star = p.s0 + std::max(0.0, dyn);
  return p.a_max * (1.0 - std::pow(v / p.v0, p.delta_exp) - (s_star / gap) * (s_star / gap));
}

TEST(Idm, FreeRoad) {
  const IdmParams p;
  const ActionBounds box;
  EXPECT_NEAR(idm_accel(20.0, 0.0, 0.0, false, p, box), 0.67 * (1.0 - std::pow(0.8, 4)), 1e-12);
  EXPECT_NEAR(idm_accel(25.0, 0.0, 0.0, false, p, box), 0.0, 1e-12);
}

TEST(Idm, InteractionTerm) {
  const IdmParams p;
  const ActionBounds wide{-100.0, 5.0, -1.0, 1.0};
  for (double gap : {15.0, 30.0, 60.0, 120.0}) {
    for (double dv : {-3.0, 0.0, 2.0, 6.0}) {
      EXPECT_NEAR(idm_accel(20.0, gap, dv, true, p, wide), idm_reference(20.0, gap, dv, p), 1e-12)
          << "gap " << gap << " dv " << dv;
    }
  }
}

TEST(Idm, ClampedToBox) {
  const IdmParams p;
  const ActionBounds box;
  EXPECT_DOUBLE_EQ(idm_accel(20.0, 2.0, 5.0, true, p, box), -1.7);
  EXPECT_LE(idm_accel(5.0, 0.0, 0.0, false, p, box), 0.67);
}

TEST(LateralPd, SignAndLimits) {
  const LaneChangeParams p;
  const ActionBounds box;
  EXPECT_NEAR(lateral_pd(0.5, 0.0, 20.0, p, box), -0.3, 1e-12);
  EXPECT_DOUBLE_EQ(lateral_pd(-10.0, 0.0, 20.0, p, box), 1.0);
  EXPECT_NEAR(lateral_pd(-10.0, 0.0, 2.0, p, box), 0.5, 1e-12);
}

TEST(Road, LaneOfClamps) {
  const Road r;
  EXPECT_EQ(r.lane_of(-1.0), 0);
  EXPECT_EQ(r.lane_of(5.55), 1);
  EXPECT_EQ(r.lane_of(50.0), 2);
  EXPECT_DOUBLE_EQ(r.center(2), 9.25);
}

Snapshot one_pov(double x, double y, double v) {
  Snapshot s;
  s.sv = VehicleState(0.0, 5.55, 20.0, 0.0);
  s.povs.emplace_back(x, y, v, 0.0);
  return s;
}

TEST(Neighbors, LeadAndLag) {
  const SvPolicyParams p = SvPolicyParams::conservative();
  const Snapshot s = one_pov(30.0, 5.55, 15.0);
  const auto lead = lead_in_lane(s, 1, p);
  ASSERT_TRUE(lead.has_value());
  EXPECT_NEAR(lead->gap, 25.0, 1e-12);
  EXPECT_NEAR(lead->speed, 15.0, 1e-12);
  EXPECT_FALSE(lag_in_lane(s, 1, p).has_value());
  EXPECT_FALSE(lead_in_lane(s, 0, p).has_value());
}

TEST(LaneChange, PassesSlowLeadOnTheLeft) {
  const SvPolicyParams p = SvPolicyParams::conservative();
  PolicyState st;
  st.current_lane = 1;
  EXPECT_EQ(lane_change_decision(one_pov(25.0, 5.55, 10.0), st, p), std::optional<int>(2));
  st.cooldown_remaining = 1.0;
  EXPECT_FALSE(lane_change_decision(one_pov(25.0, 5.55, 10.0), st, p).has_value());
}

TEST(LaneChange, StaysWithoutGain) {
  const SvPolicyParams p = SvPolicyParams::conservative();
  PolicyState st;
  st.current_lane = 1;
  EXPECT_FALSE(lane_change_decision(one_pov(300.0, 5.55, 20.0), st, p).has_value());
}

TEST(LaneChange, MergeLaneWins) {
  SvPolicyParams p = SvPolicyParams::conservative();
  p.merge_lane = 0;
  PolicyState st;
  st.current_lane = 1;
  EXPECT_EQ(lane_change_decision(one_pov(300.0, 9.25, 20.0), st, p), std::optional<int>(0));
}

TEST(PolicyStep, ControlInsideBox) {
  const SvPolicyParams p = SvPolicyParams::conservative();
  PolicyState st;
  Snapshot s = one_pov(8.0, 5.55, 5.0);
  for (int k = 0; k < 50; ++k) {
    const PolicyOutput out = policy_step(s, st, p, 0.1);
    EXPECT_TRUE(p.box.contains(out.control));
    EXPECT_EQ(out.state.last_control, out.control);
    st = out.state;
    s.sv.y += 0.01;
  }
}

TEST(SvPolicyParams, AggressivePreset) {
  const SvPolicyParams p = SvPolicyParams::aggressive(30.0);
  EXPECT_DOUBLE_EQ(p.idm.a_max, 2.6);
  EXPECT_DOUBLE_EQ(p.idm.v0, 30.0);
  EXPECT_NO_THROW(p.validate());
  SvPolicyParams bad = p;
  bad.merge_lane = 7;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(ExternalPolicy, HoldsThenDecays) {
  ExternalPolicy ext(BicycleParams{}, ActionBounds{});
  EXPECT_EQ(ext.take_control(0.0), AnchorControl{});
  ext.set_command(5.0, 0.4, 1.0);
  EXPECT_EQ(ext.take_control(1.3), (AnchorControl{0.67, 0.4}));
  const AnchorControl stale = ext.take_control(1.75);
  EXPECT_DOUBLE_EQ(stale.a, 0.0);
  EXPECT_NEAR(stale.steer, 0.4 - 0.8 * 0.25, 1e-12);
  EXPECT_DOUBLE_EQ(ext.take_control(3.0).steer, 0.0);
  ext.set_command(-9.0, -2.0, 4.0);
  EXPECT_EQ(ext.take_control(4.0), (AnchorControl{-1.7, -0.6}));
  ext.clear();
  EXPECT_EQ(ext.take_control(4.0), AnchorControl{});
}

TEST(ExternalPolicy, IgnoresNonFinite) {
  ExternalPolicy ext(BicycleParams{}, ActionBounds{});
  ext.set_command(0.1, 0.0, 0.0);
  ext.set_command(std::nan(""), 0.0, 0.1);
  EXPECT_EQ(ext.take_control(0.2), (AnchorControl{0.1, 0.0}));
}

}  // namespace
}  // namespace adversim
