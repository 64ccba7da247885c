#include <random>

#include <gtest/gtest.h>

#include <adversim/qp.hpp>

#include "oracles.hpp"

namespace adversim {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

QpProblem to_problem(const testing::RandomQp& q) {
  std::optional<EqualityRows> eq;
  if (q.ae.rows() > 0) eq = EqualityRows{q.ae, q.be};
  return QpProblem(q.h, q.g, Polytope(q.gi, q.hi), eq);
}

TEST(Qp, MatchesActiveSetEnumeration) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dn(2, 6), dm(1, 8), deq(0, 2);
  for (int i = 0; i < 150; ++i) {
    const int n = dn(rng);
    const auto q = testing::random_qp(rng, n, dm(rng), std::min(deq(rng), n - 1));
    const QpProblem p = to_problem(q);
    const QpSolution sol = solve(p);
    const auto ref = testing::brute_force_qp(q.h, q.g, q.gi, q.hi, q.ae, q.be);
    ASSERT_TRUE(ref.has_value());
    ASSERT_EQ(sol.status, QpStatus::Optimal) << "instance " << i;
    EXPECT_LT((sol.x - ref->x).lpNorm<Eigen::Infinity>(), 1e-6) << "instance " << i;
    EXPECT_LT(kkt_residual(p, sol), 1e-8) << "instance " << i;
    EXPECT_NEAR(sol.objective, ref->objective, 1e-6 * (1.0 + std::abs(ref->objective)));
  }
}

TEST(Qp, ProjectionOntoBox) {
  MatrixXd g(4, 2);
  g << 1, 0, -1, 0, 0, 1, 0, -1;
  const VectorXd h = VectorXd::Ones(4);
  // min |x - (3, 0.5)|^2
  const QpProblem p(2.0 * MatrixXd::Identity(2, 2), Eigen::Vector2d(-6.0, -1.0), Polytope(g, h));
  const QpSolution sol = solve(p);
  ASSERT_EQ(sol.status, QpStatus::Optimal);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-10);
  EXPECT_NEAR(sol.x(1), 0.5, 1e-10);
  ASSERT_EQ(sol.active, std::vector<int>{0});
  EXPECT_NEAR(sol.dual_ineq(0), 4.0, 1e-9);
}

TEST(Qp, InfeasibleGivesFarkasCertificate) {
  MatrixXd g(2, 1);
  g << 1, -1;
  const Eigen::Vector2d h(-1.0, -1.0);  // x <= -1 and x >= 1
  const QpProblem p(MatrixXd::Identity(1, 1), VectorXd::Zero(1), Polytope(g, h));
  const QpSolution sol = solve(p);
  ASSERT_EQ(sol.status, QpStatus::Infeasible);
  ASSERT_EQ(sol.dual_ineq.size(), 2);
  EXPECT_GE(sol.dual_ineq.minCoeff(), 0.0);
  EXPECT_LT((g.transpose() * sol.dual_ineq).norm(), 1e-9);
  EXPECT_LT(h.dot(sol.dual_ineq), 0.0);
}

TEST(Qp, IndefiniteHessianIsShifted) {
  MatrixXd hess(2, 2);
  hess << -1, 0, 0, 1;
  MatrixXd g(4, 2);
  g << 1, 0, -1, 0, 0, 1, 0, -1;
  const QpProblem p(hess, VectorXd::Zero(2), Polytope(g, VectorXd::Ones(4)));
  EXPECT_NEAR(p.regularization(), 1.0 + 1e-8, 1e-12);
  const QpSolution sol = solve(p);
  EXPECT_EQ(sol.status, QpStatus::Optimal);
  EXPECT_NEAR(sol.regularization, p.regularization(), 0.0);
}

TEST(Qp, BitIdenticalRepeats) {
  std::mt19937_64 rng(5);
  const auto q = testing::random_qp(rng, 6, 8, 1);
  const QpProblem p = to_problem(q);
  const QpSolution a = solve(p);
  const QpSolution b = solve(p);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.dual_ineq, b.dual_ineq);
  EXPECT_EQ(a.active, b.active);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Qp, WarmStartReachesSameOptimum) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 30; ++i) {
    const auto q = testing::random_qp(rng, 5, 7, 0);
    const QpProblem p = to_problem(q);
    const QpSolution cold = solve(p);
    ASSERT_EQ(cold.status, QpStatus::Optimal);
    QpOptions warm;
    warm.x0 = cold.x;
    warm.active = cold.active;
    const QpSolution hot = solve(p, warm);
    ASSERT_EQ(hot.status, QpStatus::Optimal);
    EXPECT_LT((hot.x - cold.x).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_LE(hot.iterations, cold.iterations);
  }
}

TEST(Qp, EqualityOnly) {
  // min x'x s.t. x0 + x1 = 2
  EqualityRows eq{MatrixXd::Ones(1, 2), VectorXd::Constant(1, 2.0)};
  const QpProblem p(2.0 * MatrixXd::Identity(2, 2), VectorXd::Zero(2), Polytope::unconstrained(2),
                    eq);
  const QpSolution sol = solve(p);
  ASSERT_EQ(sol.status, QpStatus::Optimal);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-10);
  EXPECT_NEAR(sol.x(1), 1.0, 1e-10);
}

TEST(Polytope, IntersectAndContains) {
  MatrixXd g(1, 2);
  g << 1, 0;
  const Polytope a(g, VectorXd::Ones(1));
  const Polytope b = a.with_row(Eigen::Vector2d(0, 1), 2.0);
  EXPECT_EQ(b.rows(), 2);
  EXPECT_TRUE(b.contains(Eigen::Vector2d(1.0, 2.0)));
  EXPECT_FALSE(b.contains(Eigen::Vector2d(1.0, 2.1)));
  EXPECT_EQ(a.intersect(b).rows(), 3);
  EXPECT_NEAR(b.max_violation(Eigen::Vector2d(3.0, 0.0)), 2.0, 1e-15);
}

}  // namespace
}  // namespace adversim
