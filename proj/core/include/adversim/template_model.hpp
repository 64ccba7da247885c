#pragma once

#include <vector>

#include <Eigen/Core>

#include "adversim/scenario.hpp"

namespace adversim {

class NonPositiveSpeed : public Error {
 public:
  using Error::Error;
};

class EmptyBox : public Error {
 public:
  using Error::Error;
};

/// Longitudinal and lateral acceleration of the template model.
struct TemplateControl {
  double a_x = 0.0;
  double a_y = 0.0;

  Eigen::Vector2d vec() const { return {a_x, a_y}; }
  bool operator==(const TemplateControl&) const = default;
};

/// Direction of travel along the road axis. Reverse vehicles (on-coming
/// traffic) are linearized about heading pi instead of 0.
enum class Direction : int { Forward = 1, Reverse = -1 };

double lane_heading(Direction d);
Direction direction_of(double phi);

/// Discrete-time small-angle template dynamics s' = A s + B u with
/// s = [x, y, v, phi_rel], where phi_rel is the heading relative to the lane
/// direction. For Direction::Forward the matrices are
///
///   A = [1 0 D 0; 0 1 0 vD; 0 0 1 0; 0 0 0 1],  B = [0 0; 0 0; D 0; 0 D/v]
///
/// with D the time step and v the linearization speed.
struct TemplateMatrices {
  Eigen::Matrix4d a;
  Eigen::Matrix<double, 4, 2> b;
  double v_tilde = 0.0;
  double delta = 0.0;
  Direction direction = Direction::Forward;
};

TemplateMatrices build_matrices(double v_tilde, double delta,
                                Direction direction = Direction::Forward);

/// Template-frame vector [x, y, v, phi - lane_heading].
Eigen::Vector4d to_template(const VehicleState& s, Direction d);
VehicleState from_template(const Eigen::Vector4d& s, Direction d);

/// One step of s' = A s + B u. No clamping is applied.
VehicleState step(const VehicleState& s, const TemplateControl& u,
                  const TemplateMatrices& m);

/// N+1 states starting at s0.
std::vector<VehicleState> rollout(const VehicleState& s0,
                                  const std::vector<TemplateControl>& u_seq,
                                  const TemplateMatrices& m);

/// Box bounds on (a_x, a_y).
struct ActionBounds {
  double ax_min = -1.7;
  double ax_max = 0.67;
  double ay_min = -1.0;
  double ay_max = 1.0;

  static ActionBounds paper_default() { return {}; }
  TemplateControl clamp(const TemplateControl& u) const;
  bool contains(const TemplateControl& u, double slack = 1e-9) const;
  bool operator==(const ActionBounds&) const = default;
};

/// Four box rows; with `kamm` set, four diagonal rows |a_x| + |a_y| <= r
/// (r = largest bound magnitude) cut the corners, giving an inner
/// approximation of the friction circle.
Polytope default_action_polytope(const ActionBounds& bounds, bool kamm = false);

struct SpeedRange {
  double min = 5.0;
  double max = 45.0;

  bool operator==(const SpeedRange&) const = default;
};

/// Rows on y (drivable band shrunk by half the vehicle width), v, and
/// |phi_rel| <= phi_max. x is left unconstrained.
Polytope lane_state_polytope(int lane_count, double lane_width,
                             SpeedRange v_range, double vehicle_width = 2.0,
                             double phi_max = 0.3);

/// A state row whose right-hand side changes along the horizon:
/// g . s_k <= h[min(k, h.size() - 1)].
struct TimedRow {
  Eigen::Vector4d g = Eigen::Vector4d::Zero();
  std::vector<double> h;

  double rhs(int k) const;
};

/// Admissible state-action space of one vehicle, in the template frame.
struct AdmissibleSpace {
  Polytope action;
  Polytope state;
  ActionBounds bounds;
  std::vector<TimedRow> timed;

  AdmissibleSpace() = default;
  /// Throws adversim::Error if either polytope is empty.
  AdmissibleSpace(Polytope action, Polytope state, ActionBounds bounds,
                  std::vector<TimedRow> timed = {});

  /// Row count of the state constraints at one step (static + timed).
  Eigen::Index state_rows() const;
  /// Stacked state rows applicable at step k.
  Polytope state_at(int k) const;
};

/// Feasibility probe used when building admissible spaces.
bool is_nonempty(const Polytope& p);

/// Vertices of a bounded two-dimensional polytope, counter-clockwise.
std::vector<Eigen::Vector2d> polygon_vertices(const Polytope& p);

}  // namespace adversim
