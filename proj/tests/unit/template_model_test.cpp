#include <random>

#include <gtest/gtest.h>

#include <adversim/template_model.hpp>

namespace adversim {
namespace {

TEST(TemplateMatrices, ForwardEntries) {
  const TemplateMatrices m = build_matrices(20.0, 0.1);
  Eigen::Matrix4d a;
  a << 1, 0, 0.1, 0, 0, 1, 0, 2.0, 0, 0, 1, 0, 0, 0, 0, 1;
  Eigen::Matrix<double, 4, 2> b;
  b << 0, 0, 0, 0, 0.1, 0, 0, 0.005;
  EXPECT_TRUE(m.a.isApprox(a, 1e-15));
  EXPECT_TRUE(m.b.isApprox(b, 1e-15));
}

TEST(TemplateMatrices, RejectsNonPositiveSpeed) {
  EXPECT_THROW(build_matrices(0.0, 0.1), NonPositiveSpeed);
  EXPECT_THROW(build_matrices(-3.0, 0.1), NonPositiveSpeed);
}

TEST(TemplateStep, MatchesLinearMap) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-50, 50), spd(5, 40), hd(-0.2, 0.2), acc(-2, 2);
  for (int i = 0; i < 200; ++i) {
    const VehicleState s(pos(rng), pos(rng), spd(rng), hd(rng));
    const TemplateMatrices m = build_matrices(s.v, 0.1);
    const TemplateControl u{acc(rng), acc(rng)};
    const Eigen::Vector4d expect = m.a * s.vec() + m.b * u.vec();
    EXPECT_LT((step(s, u, m).vec() - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(TemplateStep, ReverseVehicleMovesTowardNegativeX) {
  const VehicleState s(100.0, 9.25, 15.0, kPi);
  const TemplateMatrices m = build_matrices(15.0, 0.1, Direction::Reverse);
  const VehicleState n = step(s, {}, m);
  EXPECT_NEAR(n.x, 98.5, 1e-12);
  EXPECT_NEAR(n.y, 9.25, 1e-12);
  EXPECT_NEAR(std::abs(n.phi), kPi, 1e-12);
}

TEST(TemplateFrame, RoundTrip) {
  for (const Direction d : {Direction::Forward, Direction::Reverse}) {
    const VehicleState s(3.0, 4.0, 12.0, d == Direction::Forward ? 0.1 : kPi - 0.1);
    const VehicleState back = from_template(to_template(s, d), d);
    EXPECT_NEAR(back.x, s.x, 1e-12);
    EXPECT_NEAR(back.y, s.y, 1e-12);
    EXPECT_NEAR(back.v, s.v, 1e-12);
    EXPECT_NEAR(wrap_angle(back.phi - s.phi), 0.0, 1e-12);
  }
}

TEST(Rollout, HasOneMoreStateThanControls) {
  const TemplateMatrices m = build_matrices(10.0, 0.1);
  const auto states = rollout(VehicleState(0, 0, 10, 0), {{1, 0}, {1, 0}, {1, 0}}, m);
  ASSERT_EQ(states.size(), 4u);
  EXPECT_NEAR(states.back().v, 10.3, 1e-12);
}

TEST(ActionBounds, ClampAndContains) {
  const ActionBounds box;
  const TemplateControl u = box.clamp({5.0, -5.0});
  EXPECT_DOUBLE_EQ(u.a_x, 0.67);
  EXPECT_DOUBLE_EQ(u.a_y, -1.0);
  EXPECT_TRUE(box.contains(u));
  EXPECT_FALSE(box.contains({-1.8, 0.0}));
}

TEST(ActionPolytope, BoxVerticesCounterClockwise) {
  const auto v = polygon_vertices(default_action_polytope(ActionBounds{}));
  ASSERT_EQ(v.size(), 4u);
  double area = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % v.size()];
    area += p.x() * q.y() - q.x() * p.y();
  }
  EXPECT_NEAR(0.5 * area, (0.67 + 1.7) * 2.0, 1e-9);
}

TEST(ActionPolytope, KammCutsCorners) {
  const Polytope p = default_action_polytope(ActionBounds{}, true);
  EXPECT_EQ(p.rows(), 8);
  EXPECT_FALSE(p.contains(Eigen::Vector2d(-1.7, 1.0)));
  EXPECT_TRUE(p.contains(Eigen::Vector2d(-1.0, 0.5)));
}

TEST(LaneStatePolytope, ShrinksBandByHalfWidth) {
  const Polytope p = lane_state_polytope(3, 3.7, {5.0, 45.0});
  EXPECT_TRUE(p.contains(Eigen::Vector4d(0, 1.0, 20, 0)));
  EXPECT_FALSE(p.contains(Eigen::Vector4d(0, 0.9, 20, 0)));
  EXPECT_TRUE(p.contains(Eigen::Vector4d(0, 10.1, 20, 0)));
  EXPECT_FALSE(p.contains(Eigen::Vector4d(0, 10.2, 20, 0)));
  EXPECT_FALSE(p.contains(Eigen::Vector4d(0, 5, 4.9, 0)));
  EXPECT_FALSE(p.contains(Eigen::Vector4d(0, 5, 20, 0.31)));
}

TEST(AdmissibleSpace, RejectsEmptyPolytope) {
  Eigen::MatrixXd g(2, 2);
  g << 1, 0, -1, 0;
  const Polytope empty(g, Eigen::Vector2d(-1.0, -1.0));
  EXPECT_THROW(AdmissibleSpace(empty, Polytope::unconstrained(4), ActionBounds{}), Error);
}

TEST(TimedRow, HoldsLastValue) {
  TimedRow r;
  r.h = {1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(r.rhs(0), 1.0);
  EXPECT_DOUBLE_EQ(r.rhs(2), 3.0);
  EXPECT_DOUBLE_EQ(r.rhs(9), 3.0);
}

}  // namespace
}  // namespace adversim
