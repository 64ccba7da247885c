#include "adversim/template_model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "adversim/qp.hpp"

namespace adversim {

double lane_heading(Direction d) {
  return d == Direction::Forward ? 0.0 : kPi;
}

Direction direction_of(double phi) {
  return std::abs(wrap_angle(phi)) > 0.5 * kPi ? Direction::Reverse
                                              : Direction::Forward;
}

TemplateMatrices build_matrices(double v_tilde, double delta, Direction direction) {
  if (!(v_tilde > 0.0)) {
    throw NonPositiveSpeed("template linearization speed must be positive");
  }
  if (!(delta > 0.0)) throw Error("time step must be positive");
  const double sign = static_cast<double>(static_cast<int>(direction));
  TemplateMatrices m;
  m.a.setIdentity();
  m.a(0, 2) = sign * delta;
  m.a(1, 3) = sign * v_tilde * delta;
  m.b.setZero();
  m.b(2, 0) = delta;
  m.b(3, 1) = delta / v_tilde;
  m.v_tilde = v_tilde;
  m.delta = delta;
  m.direction = direction;
  return m;
}

Eigen::Vector4d to_template(const VehicleState& s, Direction d) {
  return {s.x, s.y, s.v, wrap_angle(s.phi - lane_heading(d))};
}

VehicleState from_template(const Eigen::Vector4d& s, Direction d) {
  return {s[0], s[1], s[2], s[3] + lane_heading(d)};
}

VehicleState step(const VehicleState& s, const TemplateControl& u,
                  const TemplateMatrices& m) {
  const Eigen::Vector4d next =
      m.a * to_template(s, m.direction) + m.b * u.vec();
  return from_template(next, m.direction);
}

std::vector<VehicleState> rollout(const VehicleState& s0,
                                  const std::vector<TemplateControl>& u_seq,
                                  const TemplateMatrices& m) {
  std::vector<VehicleState> out;
  out.reserve(u_seq.size() + 1);
  out.push_back(s0);
  for (const auto& u : u_seq) out.push_back(step(out.back(), u, m));
  return out;
}

TemplateControl ActionBounds::clamp(const TemplateControl& u) const {
  return {std::clamp(u.a_x, ax_min, ax_max), std::clamp(u.a_y, ay_min, ay_max)};
}

bool ActionBounds::contains(const TemplateControl& u, double slack) const {
  return u.a_x >= ax_min - slack && u.a_x <= ax_max + slack &&
         u.a_y >= ay_min - slack && u.a_y <= ay_max + slack;
}

Polytope default_action_polytope(const ActionBounds& b, bool kamm) {
  if (!(b.ax_min < b.ax_max) || !(b.ay_min < b.ay_max)) {
    throw EmptyBox("action bounds need min < max on both axes");
  }
  const int rows = kamm ? 8 : 4;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(rows, 2);
  Eigen::VectorXd h(rows);
  g(0, 0) = 1.0;
  h(0) = b.ax_max;
  g(1, 0) = -1.0;
  h(1) = -b.ax_min;
  g(2, 1) = 1.0;
  h(2) = b.ay_max;
  g(3, 1) = -1.0;
  h(3) = -b.ay_min;
  if (kamm) {
    const double r = std::max({std::abs(b.ax_min), std::abs(b.ax_max),
                               std::abs(b.ay_min), std::abs(b.ay_max)});
    const double signs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    for (int i = 0; i < 4; ++i) {
      g(4 + i, 0) = signs[i][0];
      g(4 + i, 1) = signs[i][1];
      h(4 + i) = r;
    }
  }
  return Polytope(std::move(g), std::move(h));
}

Polytope lane_state_polytope(int lane_count, double lane_width,
                             SpeedRange v_range, double vehicle_width,
                             double phi_max) {
  if (lane_count < 1) throw Error("lane_count must be at least 1");
  if (!(lane_width > 0.0)) throw Error("lane_width must be positive");
  if (!(v_range.min < v_range.max)) throw Error("invalid speed range");
  const double y_min = 0.5 * vehicle_width;
  const double y_max = lane_count * lane_width - 0.5 * vehicle_width;
  if (!(y_min < y_max)) throw Error("vehicle does not fit on the road");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(6, 4);
  Eigen::VectorXd h(6);
  g(0, 1) = 1.0;
  h(0) = y_max;
  g(1, 1) = -1.0;
  h(1) = -y_min;
  g(2, 2) = 1.0;
  h(2) = v_range.max;
  g(3, 2) = -1.0;
  h(3) = -v_range.min;
  g(4, 3) = 1.0;
  h(4) = phi_max;
  g(5, 3) = -1.0;
  h(5) = phi_max;
  return Polytope(std::move(g), std::move(h));
}

double TimedRow::rhs(int k) const {
  if (h.empty()) throw Error("timed row without right-hand side");
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)),
                                         h.size() - 1);
  return h[idx];
}

AdmissibleSpace::AdmissibleSpace(Polytope action_, Polytope state_,
                                 ActionBounds bounds_, std::vector<TimedRow> timed_)
    : action(std::move(action_)),
      state(std::move(state_)),
      bounds(bounds_),
      timed(std::move(timed_)) {
  if (action.dim() != 2) throw Error("action polytope must be two-dimensional");
  if (state.dim() != 4) throw Error("state polytope must be four-dimensional");
  if (!is_nonempty(action)) throw Error("action polytope is empty");
  if (!is_nonempty(state)) throw Error("state polytope is empty");
}

Eigen::Index AdmissibleSpace::state_rows() const {
  return state.rows() + static_cast<Eigen::Index>(timed.size());
}

Polytope AdmissibleSpace::state_at(int k) const {
  Polytope p = state;
  for (const auto& row : timed) p = p.with_row(row.g, row.rhs(k));
  return p;
}

bool is_nonempty(const Polytope& p) {
  if (p.rows() == 0) return true;
  const Eigen::Index n = p.dim();
  QpProblem probe(Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), p);
  const QpSolution sol = solve(probe, QpOptions::with(1e-9, 500));
  return sol.status != QpStatus::Infeasible;
}

std::vector<Eigen::Vector2d> polygon_vertices(const Polytope& p) {
  if (p.dim() != 2) throw Error("polygon_vertices needs a 2-D polytope");
  std::vector<Eigen::Vector2d> pts;
  const Eigen::Index m = p.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      Eigen::Matrix2d a;
      a << p.g().row(i), p.g().row(j);
      if (std::abs(a.determinant()) < 1e-12) continue;
      const Eigen::Vector2d z = a.partialPivLu().solve(
          Eigen::Vector2d(p.h()(i), p.h()(j)));
      if (!p.contains(z, 1e-9)) continue;
      const bool dup = std::any_of(pts.begin(), pts.end(), [&](const auto& q) {
        return (q - z).norm() < 1e-9;
      });
      if (!dup) pts.push_back(z);
    }
  }
  if (pts.empty()) return pts;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& q : pts) c += q;
  c /= static_cast<double>(pts.size());
  std::sort(pts.begin(), pts.end(), [&](const auto& a, const auto& b) {
    return std::atan2(a.y() - c.y(), a.x() - c.x()) <
           std::atan2(b.y() - c.y(), b.x() - c.x());
  });
  return pts;
}

}  // namespace adversim
