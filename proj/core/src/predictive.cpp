#include "adversim/predictive.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "adversim/horizon.hpp"
#include "adversim/worst_case.hpp"

namespace adversim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TrackingWeights TrackingWeights::paper_default() {
  TrackingWeights w;
  w.q_r = Eigen::Vector4d(1.0, 100.0, 0.1, 0.1).asDiagonal();
  w.q_f = w.q_r;
  return w;
}

namespace {

void check_psd(const Eigen::Matrix4d& q, const char* name) {
  if (!q.allFinite()) throw Error(std::string(name) + " has non-finite entries");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(std::string(name) + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(q, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8) {
    throw Error(std::string(name) + " must be positive semidefinite");
  }
}

// Largest scaling of u (toward the origin) that satisfies the action rows.
TemplateControl into_polytope(const TemplateControl& raw, const AdmissibleSpace& space) {
  TemplateControl u = space.bounds.clamp(raw);
  const Eigen::Vector2d z = u.vec();
  if (space.action.contains(z)) return u;
  if (!space.action.contains(Eigen::Vector2d::Zero())) return u;
  double lambda = 1.0;
  for (Eigen::Index i = 0; i < space.action.rows(); ++i) {
    const double gz = space.action.g().row(i).dot(z);
    if (gz > space.action.h()(i)) lambda = std::min(lambda, space.action.h()(i) / gz);
  }
  return {lambda * u.a_x, lambda * u.a_y};
}

VectorXd row_violation(const Polytope& p, const Eigen::Vector4d& s) {
  if (p.rows() == 0) return VectorXd(0);
  return (p.g() * s - p.h()).cwiseMax(0.0);
}

}  // namespace

void TrackingWeights::validate() const {
  check_psd(q_r, "running weight");
  check_psd(q_f, "terminal weight");
}

SvPrediction predict_sv(const VehicleState& sv, const TemplateControl& last_control,
                        double t_bar, const TemplateMatrices& mats,
                        const AdmissibleSpace& space, bool steady_state) {
  const int steps = horizon_steps(t_bar, mats.delta);
  SvPrediction out;
  out.assumed_control = steady_state ? TemplateControl{} : into_polytope(last_control, space);
  out.states.reserve(static_cast<std::size_t>(steps) + 1);
  out.controls.reserve(static_cast<std::size_t>(steps));
  out.states.push_back(sv);
  bool zeroed = steady_state;
  for (int k = 0; k < steps; ++k) {
    const VehicleState& cur = out.states.back();
    TemplateControl u = zeroed ? TemplateControl{} : out.assumed_control;
    VehicleState next = step(cur, u, mats);
    if (!zeroed) {
      const Polytope now = space.state_at(k);
      const Polytope later = space.state_at(k + 1);
      const VectorXd before = row_violation(now, to_template(cur, mats.direction));
      const VectorXd after = row_violation(later, to_template(next, mats.direction));
      if (after.size() > 0 && ((after - before).array() > 1e-12).any()) {
        zeroed = true;
        u = {};
        next = step(cur, u, mats);
      }
    }
    out.controls.push_back(u);
    out.states.push_back(next);
  }
  return out;
}

TemplateControl estimate_control(const VehicleState& prev, const VehicleState& curr,
                                 double dt) {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  return {(curr.v - prev.v) / dt, curr.v * wrap_angle(curr.phi - prev.phi) / dt};
}

TrackingPlan plan_tracking(const VehicleState& pov, const SvPrediction& prediction,
                           const TrackingWeights& weights, const AdmissibleSpace& space,
                           const TemplateMatrices& mats,
                           const std::optional<VectorXd>& warm_start, const QpOptions& qp) {
  weights.validate();
  const int steps = static_cast<int>(prediction.controls.size());
  if (steps < 1 || prediction.states.size() != static_cast<std::size_t>(steps) + 1) {
    throw Error("prediction must hold steps + 1 states");
  }
  const Eigen::Vector2d origin(pov.x, pov.y);
  const HorizonMap map = build_horizon(to_template(pov, mats.direction), mats, steps, origin);
  const Eigen::Index n = map.controls();
  const double lane = lane_heading(mats.direction);

  // Target states in the POV's relative template frame. Headings are compared
  // modulo pi so on-coming POVs are not pulled toward a U-turn.
  std::vector<Eigen::Vector4d> target;
  target.reserve(prediction.states.size());
  for (const auto& s : prediction.states) {
    double dphi = wrap_angle(s.phi - lane);
    if (std::abs(dphi) > 0.5 * kPi) dphi = wrap_angle(dphi + kPi);
    target.emplace_back(s.x - origin.x(), s.y - origin.y(), s.v, dphi);
  }

  MatrixXd hess = MatrixXd::Zero(n, n);
  VectorXd grad = VectorXd::Zero(n);
  for (int k = 1; k <= steps; ++k) {
    const Eigen::Matrix4d& q = k < steps ? weights.q_r : weights.q_f;
    const MatrixXd& gam = map.gamma[static_cast<std::size_t>(k)];
    const Eigen::Vector4d err0 = map.free[static_cast<std::size_t>(k)] -
                                 target[static_cast<std::size_t>(k)];
    hess.noalias() += 2.0 * gam.transpose() * q * gam;
    grad.noalias() += 2.0 * gam.transpose() * (q * err0);
  }

  const Polytope action = stacked_action_rows(space.action, steps);
  const StateRows state = stacked_state_rows(space, map, VectorXd::Zero(space.state_rows()));
  const VectorXd relax = initial_violation(space, map);

  QpOptions opt = qp;
  if (warm_start && warm_start->size() == n) opt.x0 = *warm_start;
  RelaxedSolve rs = solve_relaxed(hess, grad, action, state.rows, state.row_class, relax, opt);

  TrackingPlan plan;
  plan.status = rs.sol.status;
  plan.relaxed = rs.elastic || (relax.size() > 0 && relax.maxCoeff() > 0.0);
  plan.controls = unstack_controls(rs.sol.x);
  plan.reference = rollout(pov, plan.controls, mats);
  double cost = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const Eigen::Matrix4d& q = k < steps ? weights.q_r : weights.q_f;
    const Eigen::Vector4d err =
        map.state(k, rs.sol.x) - target[static_cast<std::size_t>(k)];
    cost += err.dot(q * err);
  }
  plan.cost = cost;
  return plan;
}

}  // namespace adversim
