#include <cmath>

#include <gtest/gtest.h>

#include <adversim/anchor_mpc.hpp>

namespace adversim {
namespace {

AdmissibleSpace road_space() {
  return AdmissibleSpace(default_action_polytope(ActionBounds{}),
                         lane_state_polytope(3, 3.7, {5.0, 45.0}), ActionBounds{});
}

TEST(AnchorStep, KinematicBicycle) {
  const BicycleParams p;
  const AnchorState s(1.0, 2.0, 10.0, 0.1);
  const AnchorState n = anchor_step(s, {1.0, 0.05}, p, 0.1);
  EXPECT_NEAR(n.x, 1.0 + 10.0 * std::cos(0.1) * 0.1, 1e-12);
  EXPECT_NEAR(n.y, 2.0 + 10.0 * std::sin(0.1) * 0.1, 1e-12);
  EXPECT_NEAR(n.v, 10.1, 1e-12);
  EXPECT_NEAR(n.phi, 0.1 + 10.0 / 2.7 * std::tan(0.05) * 0.1, 1e-12);
}

TEST(AnchorStep, SpeedNeverNegative) {
  const AnchorState n = anchor_step(AnchorState(0, 0, 0.05, 0), {-5.0, 0}, BicycleParams{}, 0.1);
  EXPECT_EQ(n.v, 0.0);
}

TEST(AnchorStep, RejectsSteerBeyondLimit) {
  EXPECT_THROW(anchor_step(AnchorState(0, 0, 10, 0), {0, 0.7}, BicycleParams{}, 0.1),
               SteerOutOfRange);
}

TEST(TemplateToAnchor, SteerFromLateralAcceleration) {
  const BicycleParams p;
  const AnchorControl c = template_to_anchor({0.3, 1.0}, 20.0, p);
  EXPECT_DOUBLE_EQ(c.a, 0.3);
  EXPECT_NEAR(c.steer, std::atan(2.7 / 400.0), 1e-15);
  EXPECT_NEAR(template_to_anchor({0, 1.0}, 0.2, p).steer, 0.6, 1e-15);
}

TEST(Linearize, ReferenceIsFixedPoint) {
  const BicycleParams p;
  std::vector<VehicleState> ref{AnchorState(0, 5.55, 18, 0)};
  for (int k = 0; k < 20; ++k) {
    ref.push_back(anchor_step(ref.back(), {0.2, 0.02 * std::sin(0.3 * k)}, p, 0.1));
  }
  const auto lin = linearize_reference(ref, p, 0.1);
  ASSERT_EQ(lin.size(), 20u);
  for (std::size_t k = 0; k < lin.size(); ++k) {
    const Eigen::Vector4d s = ref[k].vec();
    const Eigen::Vector4d next = lin[k].a * s + lin[k].b * Eigen::Vector2d(lin[k].nominal.a,
                                                                           lin[k].nominal.steer) +
                                 lin[k].c;
    EXPECT_LT((next - ref[k + 1].vec()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(lin[k].nominal.a, 0.2, 1e-9);
  }
}

TEST(Linearize, RejectsStoppedReference) {
  const std::vector<VehicleState> ref{VehicleState(0, 0, 0.05, 0), VehicleState(0, 0, 0.05, 0)};
  EXPECT_THROW(linearize_reference(ref, BicycleParams{}, 0.1), DegenerateReference);
}

TEST(Mpc, HoldsStraightReference) {
  std::vector<VehicleState> ref;
  for (int k = 0; k <= 20; ++k) ref.emplace_back(20.0 * 0.1 * k, 5.55, 20.0, 0.0);
  const MpcResult r = mpc_track(AnchorState(0, 5.55, 20, 0), ref, BicycleParams{}, road_space(),
                                TrackingWeights::paper_default(), 0.1, 0.0);
  EXPECT_FALSE(r.fallback);
  EXPECT_NEAR(r.control.a, 0.0, 1e-6);
  EXPECT_NEAR(r.control.steer, 0.0, 1e-6);
}

TEST(Mpc, SteersTowardOffsetReferenceWithinRate) {
  std::vector<VehicleState> ref;
  for (int k = 0; k <= 20; ++k) ref.emplace_back(20.0 * 0.1 * k, 9.25, 20.0, 0.0);
  AnchorMpc mpc(BicycleParams{}, TrackingWeights::paper_default(), 0.1);
  AnchorState s(0, 5.55, 20, 0);
  double prev = 0.0;
  for (int k = 0; k < 60; ++k) {
    std::vector<VehicleState> shifted = ref;
    for (auto& r : shifted) r.x += s.x;
    const MpcResult out = mpc.track(s, shifted, road_space());
    ASSERT_FALSE(out.fallback);
    EXPECT_LE(std::abs(out.control.steer - prev), 0.8 * 0.1 + 1e-9);
    EXPECT_GE(out.control.a, -1.7 - 1e-9);
    EXPECT_LE(out.control.a, 0.67 + 1e-9);
    if (k == 0) EXPECT_GT(out.control.steer, 0.0);
    prev = out.control.steer;
    s = anchor_step(s, out.control, mpc.params(), 0.1);
  }
  EXPECT_NEAR(s.y, 9.25, 0.3);
  EXPECT_NEAR(mpc.previous_steer(), prev, 0.0);
}

}  // namespace
}  // namespace adversim
