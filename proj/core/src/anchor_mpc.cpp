#include "adversim/anchor_mpc.hpp"

#include <algorithm>
#include <cmath>

#include "adversim/horizon.hpp"

namespace adversim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void BicycleParams::validate() const {
  if (!(wheelbase > 0.0) || !(steer_max > 0.0) || !(steer_rate_max > 0.0)) {
    throw Error("bicycle parameters must be positive");
  }
}

AnchorState anchor_step(const AnchorState& s, const AnchorControl& u,
                        const BicycleParams& p, double delta) {
  if (std::abs(u.steer) > p.steer_max + 1e-12) {
    throw SteerOutOfRange("steering command exceeds steer_max");
  }
  const double x = s.x + s.v * std::cos(s.phi) * delta;
  const double y = s.y + s.v * std::sin(s.phi) * delta;
  const double phi = s.phi + (s.v / p.wheelbase) * std::tan(u.steer) * delta;
  const double v = std::max(0.0, s.v + u.a * delta);
  return {x, y, v, phi};
}

AnchorControl template_to_anchor(const TemplateControl& u, double v, const BicycleParams& p) {
  const double speed = std::max(v, 1.0);
  const double steer = std::atan(p.wheelbase * u.a_y / (speed * speed));
  return {u.a_x, std::clamp(steer, -p.steer_max, p.steer_max)};
}

namespace {

std::vector<double> unwrapped_headings(const std::vector<VehicleState>& ref) {
  std::vector<double> phis;
  phis.reserve(ref.size());
  phis.push_back(ref.front().phi);
  for (std::size_t k = 1; k < ref.size(); ++k) {
    phis.push_back(phis.back() + wrap_angle(ref[k].phi - ref[k - 1].phi));
  }
  return phis;
}

void jacobians(const Eigen::Vector4d& s, const AnchorControl& u, const BicycleParams& p,
               double delta, Eigen::Matrix4d& a, Eigen::Matrix<double, 4, 2>& b) {
  const double v = s(2);
  const double phi = s(3);
  const double c = std::cos(phi);
  const double sn = std::sin(phi);
  a.setIdentity();
  a(0, 2) = c * delta;
  a(0, 3) = -v * sn * delta;
  a(1, 2) = sn * delta;
  a(1, 3) = v * c * delta;
  a(3, 2) = std::tan(u.steer) / p.wheelbase * delta;
  const bool moving = v + u.a * delta > 0.0;
  if (!moving) a(2, 2) = 0.0;
  b.setZero();
  b(2, 0) = moving ? delta : 0.0;
  const double cs = std::cos(u.steer);
  b(3, 1) = v / (p.wheelbase * cs * cs) * delta;
}

}  // namespace

std::vector<LinearizedStep> linearize_reference(const std::vector<VehicleState>& reference,
                                                const BicycleParams& p, double delta) {
  p.validate();
  if (reference.size() < 2) throw Error("reference needs at least two states");
  if (!(delta > 0.0)) throw Error("time step must be positive");
  const std::vector<double> phis = unwrapped_headings(reference);
  std::vector<LinearizedStep> out;
  out.reserve(reference.size() - 1);
  for (std::size_t k = 0; k + 1 < reference.size(); ++k) {
    const VehicleState& s = reference[k];
    const VehicleState& n = reference[k + 1];
    if (s.v < 0.1 || n.v < 0.1) {
      throw DegenerateReference("reference speed below 0.1 m/s");
    }
    LinearizedStep st;
    st.nominal.a = (n.v - s.v) / delta;
    st.nominal.steer =
        std::atan(p.wheelbase * (phis[k + 1] - phis[k]) / (s.v * delta));
    const Eigen::Vector4d sb(s.x, s.y, s.v, phis[k]);
    const Eigen::Vector4d nb(n.x, n.y, n.v, phis[k + 1]);
    jacobians(sb, st.nominal, p, delta, st.a, st.b);
    st.c = nb - st.a * sb - st.b * Eigen::Vector2d(st.nominal.a, st.nominal.steer);
    out.push_back(st);
  }
  return out;
}

MpcResult mpc_track(const AnchorState& current, const std::vector<VehicleState>& reference,
                    const BicycleParams& p, const AdmissibleSpace& space,
                    const TrackingWeights& weights, double delta, double previous_steer,
                    const MpcOptions& options) {
  if (reference.size() < 2) throw Error("reference needs at least two states");
  const int steps = static_cast<int>(reference.size()) - 1;
  const Eigen::Index n = 2 * steps;
  const Eigen::Vector2d origin(current.x, current.y);

  std::vector<VehicleState> ref = reference;
  for (auto& s : ref) {
    s.x -= origin.x();
    s.y -= origin.y();
  }
  const std::vector<double> phis = unwrapped_headings(ref);
  const std::vector<LinearizedStep> lin = linearize_reference(ref, p, delta);

  // Predicted states s_k = f[k] + phi[k] U.
  const double phi0 = phis.front() + wrap_angle(current.phi - phis.front());
  std::vector<Eigen::Vector4d> f;
  std::vector<MatrixXd> big_phi;
  f.reserve(static_cast<std::size_t>(steps) + 1);
  big_phi.reserve(static_cast<std::size_t>(steps) + 1);
  f.emplace_back(0.0, 0.0, current.v, phi0);
  big_phi.push_back(MatrixXd::Zero(4, n));
  for (int k = 0; k < steps; ++k) {
    const LinearizedStep& st = lin[static_cast<std::size_t>(k)];
    f.push_back(st.a * f.back() + st.c);
    MatrixXd next = st.a * big_phi.back();
    next.middleCols(2 * k, 2) += st.b;
    big_phi.push_back(std::move(next));
  }

  MatrixXd hess = MatrixXd::Zero(n, n);
  VectorXd grad = VectorXd::Zero(n);
  for (int k = 1; k <= steps; ++k) {
    const Eigen::Matrix4d& q = k < steps ? weights.q_r : weights.q_f;
    const auto ks = static_cast<std::size_t>(k);
    const Eigen::Vector4d target(ref[ks].x, ref[ks].y, ref[ks].v, phis[ks]);
    const Eigen::Vector4d err0 = f[ks] - target;
    hess.noalias() += 2.0 * big_phi[ks].transpose() * q * big_phi[ks];
    grad.noalias() += 2.0 * big_phi[ks].transpose() * (q * err0);
  }
  for (int k = 0; k < steps; ++k) {
    const LinearizedStep& st = lin[static_cast<std::size_t>(k)];
    hess(2 * k, 2 * k) += 2.0 * options.accel_weight;
    grad(2 * k) -= 2.0 * options.accel_weight * st.nominal.a;
    hess(2 * k + 1, 2 * k + 1) += 2.0 * options.steer_weight;
    grad(2 * k + 1) -= 2.0 * options.steer_weight * st.nominal.steer;
  }
  const double wr = options.steer_rate_weight;
  for (int k = 0; k < steps; ++k) {
    const Eigen::Index i = 2 * k + 1;
    hess(i, i) += 2.0 * wr;
    if (k == 0) {
      grad(i) -= 2.0 * wr * previous_steer;
    } else {
      const Eigen::Index j = i - 2;
      hess(j, j) += 2.0 * wr;
      hess(i, j) -= 2.0 * wr;
      hess(j, i) -= 2.0 * wr;
    }
  }

  // Hard action rows: 4 bounds plus 2 rate rows per step.
  const ActionBounds& box = space.bounds;
  MatrixXd g = MatrixXd::Zero(6 * steps, n);
  VectorXd h(6 * steps);
  const double rate = p.steer_rate_max * delta;
  for (int k = 0; k < steps; ++k) {
    const double v = ref[static_cast<std::size_t>(k)].v;
    const double v2 = v * v;
    const double hi = std::min(p.steer_max, std::atan(box.ay_max * p.wheelbase / v2));
    const double lo = std::max(-p.steer_max, std::atan(box.ay_min * p.wheelbase / v2));
    const Eigen::Index r = 6 * k;
    g(r, 2 * k) = 1.0;
    h(r) = box.ax_max;
    g(r + 1, 2 * k) = -1.0;
    h(r + 1) = -box.ax_min;
    g(r + 2, 2 * k + 1) = 1.0;
    h(r + 2) = hi;
    g(r + 3, 2 * k + 1) = -1.0;
    h(r + 3) = -lo;
    g(r + 4, 2 * k + 1) = 1.0;
    g(r + 5, 2 * k + 1) = -1.0;
    if (k == 0) {
      h(r + 4) = previous_steer + rate;
      h(r + 5) = rate - previous_steer;
    } else {
      g(r + 4, 2 * k - 1) = -1.0;
      g(r + 5, 2 * k - 1) = 1.0;
      h(r + 4) = rate;
      h(r + 5) = rate;
    }
  }
  const Polytope hard(std::move(g), std::move(h));

  // Soft state rows in the lane-relative heading frame.
  const double lane = lane_heading(direction_of(reference.front().phi));
  const double lane_eff = phis.front() - wrap_angle(phis.front() - lane);
  const int classes = static_cast<int>(space.state_rows());
  const Eigen::Index ns = space.state.rows();
  MatrixXd sg(static_cast<Eigen::Index>(classes) * steps, n);
  VectorXd sh(sg.rows());
  std::vector<int> sclass;
  sclass.reserve(static_cast<std::size_t>(sg.rows()));
  VectorXd relax = VectorXd::Zero(classes);
  const Eigen::Vector4d world0(current.x, current.y, current.v, phi0 - lane_eff);
  Eigen::Index row = 0;
  for (int k = 1; k <= steps; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    for (int c = 0; c < classes; ++c) {
      Eigen::Vector4d a;
      double rhs = 0.0;
      double rhs0 = 0.0;
      if (c < ns) {
        a = space.state.g().row(c).transpose();
        rhs = space.state.h()(c);
        rhs0 = rhs;
      } else {
        const TimedRow& tr = space.timed[static_cast<std::size_t>(c - ns)];
        a = tr.g;
        rhs = tr.rhs(k);
        rhs0 = tr.rhs(0);
      }
      if (k == 1) relax(c) = std::max(0.0, a.dot(world0) - rhs0);
      const double shift = a(0) * origin.x() + a(1) * origin.y() - a(3) * lane_eff;
      sg.row(row) = a.transpose() * big_phi[ks];
      sh(row) = rhs - shift - a.dot(f[ks]);
      sclass.push_back(c);
      ++row;
    }
  }
  const Polytope soft(std::move(sg), std::move(sh));

  MpcResult out;
  out.relaxed = relax.size() > 0 && relax.maxCoeff() > 0.0;
  try {
    RelaxedSolve rs = solve_relaxed(hess, grad, hard, soft, sclass, relax, options.qp);
    out.status = rs.sol.status;
    out.relaxed = out.relaxed || rs.elastic;
    if (!rs.sol.x.allFinite()) throw QpFailure("MPC solution is not finite", rs.sol.status);
    out.control = {rs.sol.x(0), std::clamp(rs.sol.x(1), -p.steer_max, p.steer_max)};
  } catch (const QpFailure& e) {
    out.status = e.status();
    out.fallback = true;
    out.control = {box.ax_min, std::clamp(previous_steer, -p.steer_max, p.steer_max)};
  }
  return out;
}

AnchorMpc::AnchorMpc(BicycleParams params, TrackingWeights weights, double delta,
                     MpcOptions options)
    : params_(params), weights_(std::move(weights)), delta_(delta), options_(options) {
  params_.validate();
  weights_.validate();
  if (!(delta_ > 0.0)) throw Error("time step must be positive");
}

MpcResult AnchorMpc::track(const AnchorState& current,
                           const std::vector<VehicleState>& reference,
                           const AdmissibleSpace& space) {
  MpcResult r = mpc_track(current, reference, params_, space, weights_, delta_,
                          previous_steer_, options_);
  previous_steer_ = r.control.steer;
  return r;
}

}  // namespace adversim
